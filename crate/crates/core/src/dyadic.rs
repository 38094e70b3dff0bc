//! Dyadic frequency decomposition on the lattice.
//!
//! The bank consists of a radial low-frequency bump `ψ` and annular bumps
//! `φ_j(ξ) = φ(2^{-j}|ξ|)` for integer `j`, built from a C^∞ smoothed step
//! based on `exp(-1/t)`. The base profile is the telescoping pair
//!
//! ```text
//!   χ(t) = 1 on t ≤ 3/4, 0 on t ≥ 1 (smooth in between)
//!   φ(t) = χ(t/2) − χ(t)            (supported in [3/4, 2], ≡ 1 on [1, 3/2])
//! ```
//!
//! so `ψ(ξ) = χ(2^{-(j_min+1)}|ξ|)` together with `φ_j`, `j > j_min`,
//! forms an exact partition of unity below `(3/2)·2^{j_max}`, annuli two or
//! more octaves apart have disjoint supports, and `φ_j = 1` at `|ξ| = 2^j`.
//!
//! Index convention: block indices are physical — `2^j` is a frequency in
//! grid units. The base block (the classical index “−1”) sits at `j_min`,
//! so a paper-style index is recovered as `j − j_min − 1`; smoothness
//! weights in the norm layer use that shifted index, keeping norms
//! comparable across grid resolutions.

use ndarray::ArrayD;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Which family of blocks to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Annular blocks only (`φ_j`, all bank indices); drops the mean.
    Homogeneous,
    /// Base block `ψ` at `j_min`, annular blocks above it.
    NonHomogeneous,
}

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let g = (-1.0 / t).exp();
        let h = (-1.0 / (1.0 - t)).exp();
        g / (g + h)
    }
}

/// Low-pass profile: 1 on `t ≤ 3/4`, 0 on `t ≥ 1`.
pub fn chi_profile(t: f64) -> f64 {
    1.0 - smooth_step((t - 0.75) * 4.0)
}

/// Annular profile `χ(t/2) − χ(t)`: supported in `[3/4, 2]`, 1 on `[1, 3/2]`.
pub fn phi_profile(t: f64) -> f64 {
    chi_profile(0.5 * t) - chi_profile(t)
}

#[derive(Clone, Debug)]
pub struct DyadicFilterBank {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    psi_hat: ArrayD<f64>,
    phi_hat: Vec<ArrayD<f64>>,
}

impl DyadicFilterBank {
    /// Widest usable index range for a grid: `2^{j_min} ≤ 2π/L` so the
    /// homogeneous family reaches every nonzero lattice mode, and
    /// `(8/3)·2^{j_max}` within the representable band `πN/L`.
    pub fn default_range(grid: &Grid) -> (i32, i32) {
        let fundamental = 2.0 * std::f64::consts::PI / grid.length();
        let j_min = fundamental.log2().floor() as i32;
        let j_max = (grid.nyquist() * 3.0 / 8.0).log2().floor() as i32;
        (j_min, j_max)
    }

    pub fn new(grid: &Grid, j_min: i32, j_max: i32) -> Result<DyadicFilterBank> {
        if j_max - j_min < 4 {
            return Err(Error::InvalidParameter(format!(
                "filter bank needs j_max - j_min >= 4, got [{j_min}, {j_max}]"
            )));
        }
        let top = (j_max as f64).exp2() * 8.0 / 3.0;
        if top > grid.nyquist() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "annulus at j_max = {j_max} reaches |xi| = {top:.3}, beyond the representable band {:.3}",
                grid.nyquist()
            )));
        }
        let radius: Vec<f64> = (0..grid.size()).map(|pos| grid.xi_norm_sq(pos).sqrt()).collect();
        let shape = grid.shape();
        let base_scale = (-(j_min as f64 + 1.0)).exp2();
        let psi_hat = ArrayD::from_shape_vec(
            shape.as_slice(),
            radius.iter().map(|&r| chi_profile(r * base_scale)).collect(),
        )
        .expect("shape matches grid");
        let phi_hat = (j_min..=j_max)
            .map(|j| {
                let scale = (-(j as f64)).exp2();
                ArrayD::from_shape_vec(
                    shape.as_slice(),
                    radius.iter().map(|&r| phi_profile(r * scale)).collect(),
                )
                .expect("shape matches grid")
            })
            .collect();
        Ok(DyadicFilterBank {
            grid: grid.clone(),
            j_min,
            j_max,
            psi_hat,
            phi_hat,
        })
    }

    pub fn with_default_range(grid: &Grid) -> Result<DyadicFilterBank> {
        let (j_min, j_max) = DyadicFilterBank::default_range(grid);
        DyadicFilterBank::new(grid, j_min, j_max)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Number of blocks in either mode.
    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Classical shifted index: the base block maps to −1.
    pub fn paper_index(&self, j: i32) -> i32 {
        j - self.j_min - 1
    }

    /// Partition of unity holds for `|ξ|` below this radius.
    pub fn coverage_radius(&self) -> f64 {
        1.5 * (self.j_max as f64).exp2()
    }

    pub fn psi_hat(&self) -> &ArrayD<f64> {
        &self.psi_hat
    }

    pub fn phi_hat(&self, j: i32) -> Result<&ArrayD<f64>> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::InvalidParameter(format!(
                "annulus index {j} outside bank range [{}, {}]",
                self.j_min, self.j_max
            )));
        }
        Ok(&self.phi_hat[(j - self.j_min) as usize])
    }

    fn ensure_grid(&self, u: &Field) -> Result<()> {
        self.grid.ensure_same(u.grid(), "filter bank")
    }

    /// Frequency-localized block of `u` at index `j`. In nonhomogeneous
    /// mode the block at `j_min` is the base `ψ` block; in homogeneous mode
    /// every index applies the annular multiplier.
    pub fn block(&self, u: &Field, j: i32, mode: Mode) -> Result<Field> {
        self.ensure_grid(u)?;
        if j < self.j_min || j > self.j_max {
            return Err(Error::InvalidParameter(format!(
                "block index {j} outside bank range [{}, {}]",
                self.j_min, self.j_max
            )));
        }
        let multiplier = match (mode, j == self.j_min) {
            (Mode::NonHomogeneous, true) => &self.psi_hat,
            _ => &self.phi_hat[(j - self.j_min) as usize],
        };
        u.apply_multiplier_array(multiplier)
    }

    /// Cumulative low-pass: the base block plus all annuli strictly below
    /// `j`. Accepts `j` in `[j_min, j_max + 1]`; at `j_min` the annular sum
    /// is empty and the base block alone remains. Implemented as the single
    /// multiplier `χ(2^{-max(j, j_min+1)}|ξ|)`, to which the block sum
    /// telescopes exactly.
    pub fn low_pass(&self, u: &Field, j: i32) -> Result<Field> {
        self.ensure_grid(u)?;
        if j < self.j_min || j > self.j_max + 1 {
            return Err(Error::InvalidParameter(format!(
                "low-pass index {j} outside [{}, {}]",
                self.j_min,
                self.j_max + 1
            )));
        }
        let scale = (-(j.max(self.j_min + 1) as f64)).exp2();
        u.apply_multiplier(|xi| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            chi_profile(r * scale)
        })
    }

    /// Sum of all blocks in the given mode (direct block summation).
    pub fn reconstruct(&self, u: &Field, mode: Mode) -> Result<Field> {
        let mut acc: Option<Field> = None;
        for j in self.j_min..=self.j_max {
            let b = self.block(u, j, mode)?;
            acc = Some(match acc {
                None => b,
                Some(a) => a.add(&b)?,
            });
        }
        Ok(acc.expect("bank is never empty"))
    }

    /// All blocks of `u` plus cumulative prefix sums, computed with one
    /// forward transform. Index 0 corresponds to bank index `j_min`.
    pub fn decompose(&self, u: &Field, mode: Mode) -> Result<BlockSet> {
        self.ensure_grid(u)?;
        let mut blocks = Vec::with_capacity(self.len());
        for j in self.j_min..=self.j_max {
            blocks.push(self.block(u, j, mode)?);
        }
        let mut prefixes: Vec<Field> = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            let p = if i == 0 {
                b.clone()
            } else {
                prefixes[i - 1].add(b)?
            };
            prefixes.push(p);
        }
        Ok(BlockSet {
            j_min: self.j_min,
            blocks,
            prefixes,
        })
    }

    /// Largest deviation of `ψ + Σ φ_j` from 1 over lattice modes with
    /// `|ξ| ≤ limit`.
    pub fn partition_deviation(&self, limit: f64) -> f64 {
        let mut worst = 0.0f64;
        let psi = self.psi_hat.as_slice().expect("row-major");
        for pos in 0..self.grid.size() {
            let r = self.grid.xi_norm_sq(pos).sqrt();
            if r > limit {
                continue;
            }
            let mut sum = psi[pos];
            for (offset, phi) in self.phi_hat.iter().enumerate() {
                // Partition uses annuli strictly above the base index.
                if offset == 0 {
                    continue;
                }
                sum += phi.as_slice().expect("row-major")[pos];
            }
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }
}

/// Precomputed block decomposition of one field: blocks and prefix sums,
/// both indexed from 0 (bank index `j_min`).
pub struct BlockSet {
    j_min: i32,
    blocks: Vec<Field>,
    prefixes: Vec<Field>,
}

impl BlockSet {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    /// Block at 0-based index.
    pub fn block_at(&self, idx: usize) -> &Field {
        &self.blocks[idx]
    }

    /// `Σ_{l ≤ idx}` of the blocks, clamped to the top of the range;
    /// `None` when `idx < 0` (an empty sum).
    pub fn prefix_upto(&self, idx: isize) -> Option<&Field> {
        if idx < 0 {
            None
        } else {
            let i = (idx as usize).min(self.prefixes.len() - 1);
            Some(&self.prefixes[i])
        }
    }

    /// Full reconstruction (the last prefix).
    pub fn total(&self) -> &Field {
        self.prefixes.last().expect("bank is never empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_has_documented_supports_and_plateau() {
        assert_eq!(chi_profile(0.74), 1.0);
        assert_eq!(chi_profile(1.0), 0.0);
        assert_eq!(phi_profile(0.75), 0.0);
        assert_eq!(phi_profile(2.0), 0.0);
        assert_eq!(phi_profile(1.0), 1.0);
        assert_eq!(phi_profile(1.5), 1.0);
        assert!(phi_profile(0.9) > 0.0 && phi_profile(0.9) < 1.0);
        // Quasi-orthogonality at profile level: two octaves apart never overlap.
        for i in 0..200 {
            let t = 0.5 + i as f64 * 0.02;
            assert_eq!(phi_profile(t) * phi_profile(4.0 * t), 0.0);
        }
    }

    #[test]
    fn default_range_matches_hand_computation() {
        let grid = Grid::new(2, 256, 16.0).unwrap();
        let (j_min, j_max) = DyadicFilterBank::default_range(&grid);
        assert_eq!((j_min, j_max), (-2, 4));
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let (j_min, j_max) = DyadicFilterBank::default_range(&grid);
        assert_eq!((j_min, j_max), (-2, 2));
    }

    #[test]
    fn rejects_ranges_the_lattice_cannot_host() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        assert!(DyadicFilterBank::new(&grid, -2, 1).is_err()); // too narrow
        assert!(DyadicFilterBank::new(&grid, -2, 3).is_err()); // beyond the band
        assert!(DyadicFilterBank::new(&grid, -2, 2).is_ok());
    }

    #[test]
    fn partition_of_unity_on_the_lattice() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let bank = DyadicFilterBank::with_default_range(&grid).unwrap();
        let dev = bank.partition_deviation(0.75 * (bank.j_max() as f64).exp2());
        assert!(dev <= 1e-12, "partition deviation {dev}");
        // The telescoping construction actually covers up to 1.5·2^{j_max}.
        let dev = bank.partition_deviation(bank.coverage_radius());
        assert!(dev <= 1e-12, "coverage deviation {dev}");
    }
}
