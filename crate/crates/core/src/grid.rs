//! Uniform periodic grids on the torus `[-L/2, L/2)^n`.
//!
//! A grid fixes the dimension `n` (2 or 3), the per-axis point count `N`
//! (a power of two) and the physical period `L`. Points sit at
//! `x_i = -L/2 + i·h` with `h = L/N`, so the origin is a grid point and the
//! coordinate boxes are centered at zero. Fourier modes are indexed by
//! integer wavevectors `k` with physical frequency `ξ = 2πk/L`; along each
//! axis the integers run `0, 1, ..., N/2, -N/2+1, ..., -1` in FFT storage
//! order (the Nyquist index carries the positive sign).

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 32;

#[derive(Clone, Debug)]
pub struct Grid {
    n: usize,
    points: usize,
    length: f64,
    spacing: f64,
    coords: Vec<f64>,
    k_int: Vec<i64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.points == other.points && self.length == other.length
    }
}

impl Grid {
    /// Build a periodic grid. `n` must be 2 or 3, `points` a power of two
    /// with at least [`MIN_POINTS`] entries per axis, `length` positive.
    pub fn new(n: usize, points: usize, length: f64) -> Result<Grid> {
        if n != 2 && n != 3 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 2 or 3, got {n}"
            )));
        }
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box length must be positive and finite, got {length}"
            )));
        }
        let spacing = length / points as f64;
        let coords = (0..points)
            .map(|i| -0.5 * length + spacing * i as f64)
            .collect();
        let half = points as i64 / 2;
        let k_int = (0..points as i64)
            .map(|m| if m <= half { m } else { m - points as i64 })
            .collect();
        Ok(Grid {
            n,
            points,
            length,
            spacing,
            coords,
            k_int,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Shape of a single component array: `[N; n]`.
    pub fn shape(&self) -> Vec<usize> {
        vec![self.points; self.n]
    }

    /// Total number of lattice points `N^n`.
    pub fn size(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    /// Quadrature weight of one cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.n as i32)
    }

    /// Physical coordinates along any axis (all axes are identical).
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Integer wavevector component for a storage index along one axis.
    pub fn k_int(&self) -> &[i64] {
        &self.k_int
    }

    /// Physical frequency `2πk/L` for a storage index along one axis.
    pub fn xi(&self, index: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.k_int[index] as f64 / self.length
    }

    /// Largest physical frequency representable per axis, `πN/L`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.points as f64 / self.length
    }

    /// Decompose a flat row-major index into per-axis storage indices.
    #[inline]
    pub fn unravel(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for ax in (0..self.n).rev() {
            out[ax] = rem % self.points;
            rem /= self.points;
        }
    }

    /// Squared physical frequency |ξ|² at a flat row-major spectral index.
    #[inline]
    pub fn xi_norm_sq(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut sum = 0.0;
        for _ in 0..self.n {
            let idx = rem % self.points;
            rem /= self.points;
            let xi = self.xi(idx);
            sum += xi * xi;
        }
        sum
    }

    /// Physical radius |x| at a flat row-major spatial index.
    #[inline]
    pub fn radius(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut sum = 0.0;
        for _ in 0..self.n {
            let idx = rem % self.points;
            rem /= self.points;
            let x = self.coords[idx];
            sum += x * x;
        }
        sum.sqrt()
    }

    pub fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: ({}, {}, {}) vs ({}, {}, {})",
                self.n, self.points, self.length, other.n, other.points, other.length
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_documented_examples() {
        let g = Grid::new(2, 64, 16.0).unwrap();
        assert_eq!(g.shape(), vec![64, 64]);
        assert_eq!(g.spacing(), 0.25);
        let g3 = Grid::new(3, 32, 8.0).unwrap();
        assert_eq!(g3.shape(), vec![32, 32, 32]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(1, 64, 16.0).is_err());
        assert!(Grid::new(4, 64, 16.0).is_err());
        assert!(Grid::new(2, 48, 16.0).is_err());
        assert!(Grid::new(2, 16, 16.0).is_err());
        assert!(Grid::new(2, 64, 0.0).is_err());
        assert!(Grid::new(2, 64, -2.0).is_err());
        assert!(Grid::new(2, 64, f64::NAN).is_err());
    }

    #[test]
    fn origin_is_a_grid_point_and_coords_cover_half_open_box() {
        let g = Grid::new(2, 64, 16.0).unwrap();
        assert_eq!(g.coords()[0], -8.0);
        assert_eq!(g.coords()[32], 0.0);
        let last = *g.coords().last().unwrap();
        assert!(last < 8.0 && (8.0 - last - g.spacing()).abs() < 1e-12);
    }

    #[test]
    fn wavevectors_follow_fft_order_with_positive_nyquist() {
        let g = Grid::new(2, 64, 16.0).unwrap();
        assert_eq!(g.k_int()[0], 0);
        assert_eq!(g.k_int()[1], 1);
        assert_eq!(g.k_int()[32], 32);
        assert_eq!(g.k_int()[33], -31);
        assert_eq!(g.k_int()[63], -1);
        assert!((g.xi(1) - 2.0 * std::f64::consts::PI / 16.0).abs() < 1e-15);
    }
}
