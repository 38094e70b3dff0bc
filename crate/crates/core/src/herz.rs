//! Weighted ring norms on the torus and the pointwise inequalities they
//! satisfy.
//!
//! The underlying partition splits the box into dyadic annuli around the
//! origin: `A_{-1} = {|x| < 1/2}` and `A_k = {2^{k-1} ≤ |x| < 2^k}` up to
//! the largest `k_max` with `2^{k_max} ≤ L/2`; the box corners beyond that
//! radius join the outermost ring, so the rings cover every lattice point
//! exactly once. The norm takes an Lᵖ average over each ring (midpoint
//! quadrature, weight `h^n`), weights ring `k` by `2^{αk}`, and aggregates
//! over rings in ℓ^q:
//!
//! ```text
//!   ‖u‖ = ( Σ_k (2^{αk} ‖u‖_{Lᵖ(A_k)})^q )^{1/q}
//! ```
//!
//! Exponents may be infinite; `q = ∞` takes the supremum over rings and
//! `p = ∞` the essential sup over a ring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::report::EstimateReport;

/// Exponent/weight bundle shared by the norm layer: ring weight `alpha`,
/// integrability `p`, ring aggregation `q`, block aggregation `r`, and
/// smoothness `s` (the latter two drive the dyadic layer).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

fn valid_exponent(e: f64) -> bool {
    e >= 1.0 // infinity compares true
}

impl NormParams {
    pub fn new(alpha: f64, p: f64, q: f64, r: f64, s: f64) -> Result<NormParams> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if !valid_exponent(p) || !valid_exponent(q) || !valid_exponent(r) {
            return Err(Error::InvalidParameter(format!(
                "exponents must lie in [1, inf]: p={p}, q={q}, r={r}"
            )));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter("smoothness s must be finite".into()));
        }
        Ok(NormParams { alpha, p, q, r, s })
    }

    /// Ring-norm parameters only (`r`, `s` defaulted for the dyadic layer).
    pub fn ring(alpha: f64, p: f64, q: f64) -> Result<NormParams> {
        NormParams::new(alpha, p, q, 1.0, 0.0)
    }

    pub fn with_s(mut self, s: f64) -> NormParams {
        self.s = s;
        self
    }

    pub fn with_r(mut self, r: f64) -> NormParams {
        self.r = r;
        self
    }

    /// The admissibility window of the well-posedness theory:
    /// `1 < p < ∞`, `q, r ∈ [1, ∞]`, `0 ≤ alpha < n(1 − 1/p)`, and
    /// `s ≥ n/p + 1` with `r = 1` required at equality.
    pub fn admissible_for_scheme(&self, n: usize) -> Result<()> {
        let nf = n as f64;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scheme requires 1 < p < inf, got p = {}",
                self.p
            )));
        }
        if !(0.0..nf * (1.0 - 1.0 / self.p)).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "scheme requires 0 <= alpha < n(1 - 1/p) = {}, got alpha = {}",
                nf * (1.0 - 1.0 / self.p),
                self.alpha
            )));
        }
        let critical = nf / self.p + 1.0;
        if self.s < critical - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "scheme requires s >= n/p + 1 = {critical}, got s = {}",
                self.s
            )));
        }
        if (self.s - critical).abs() <= 1e-12 && self.r != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "critical smoothness s = n/p + 1 requires r = 1, got r = {}",
                self.r
            )));
        }
        Ok(())
    }
}

/// ℓ^q aggregation of nonnegative terms; `q = ∞` is the supremum.
pub fn lq_norm(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else if q == 1.0 {
        values.sum()
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Dyadic annuli around the origin covering the whole box.
#[derive(Clone, Debug)]
pub struct RingPartition {
    grid: Grid,
    k_max: i32,
    rings: Vec<Vec<u32>>, // rings[0] is A_{-1}
}

impl RingPartition {
    pub fn new(grid: &Grid) -> Result<RingPartition> {
        if grid.length() < 16.0 {
            return Err(Error::InvalidParameter(format!(
                "ring partition needs L >= 16 for the minimum ring count, got L = {}",
                grid.length()
            )));
        }
        let k_max = (grid.length() / 2.0).log2().floor() as i32;
        let mut rings = vec![Vec::new(); (k_max + 2) as usize];
        for flat in 0..grid.size() {
            let r = grid.radius(flat);
            let k = if r < 0.5 {
                -1
            } else {
                ((r.log2().floor() as i32) + 1).min(k_max)
            };
            rings[(k + 1) as usize].push(flat as u32);
        }
        Ok(RingPartition {
            grid: grid.clone(),
            k_max,
            rings,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    /// Ring indices present: `-1 ..= k_max`.
    pub fn ring_indices(&self) -> impl Iterator<Item = i32> {
        -1..=self.k_max
    }

    pub fn ring_points(&self, k: i32) -> &[u32] {
        &self.rings[(k + 1) as usize]
    }

    /// Lᵖ norm of the pointwise magnitude of `u` over ring `k`.
    pub fn ring_lp(&self, u: &Field, k: i32, p: f64) -> f64 {
        let points = self.ring_points(k);
        if p.is_infinite() {
            points
                .iter()
                .map(|&flat| u.magnitude_at(flat as usize))
                .fold(0.0, f64::max)
        } else {
            let w = self.grid.cell_volume();
            let sum: f64 = points
                .iter()
                .map(|&flat| u.magnitude_at(flat as usize).powf(p) * w)
                .sum();
            sum.powf(1.0 / p)
        }
    }
}

/// The weighted ring norm of `u` under `params` (`alpha`, `p`, `q`).
pub fn herz_norm(u: &Field, rings: &RingPartition, params: &NormParams) -> Result<f64> {
    rings.grid.ensure_same(u.grid(), "ring norm")?;
    let terms = rings
        .ring_indices()
        .map(|k| (k as f64 * params.alpha).exp2() * rings.ring_lp(u, k, params.p));
    Ok(lq_norm(terms, params.q))
}

/// Product inequality for the ring norms: with `1/p = 1/p₁ + 1/p₂`,
/// `1/q = 1/q₁ + 1/q₂`, `alpha = alpha₁ + alpha₂`,
/// `‖uv‖ ≤ ‖u‖·‖v‖` with constant 1. Scalar×scalar and scalar×vector use
/// the pointwise product; vector×vector contracts to the dot product.
pub fn check_holder(
    u: &Field,
    v: &Field,
    params_u: &NormParams,
    params_v: &NormParams,
    rings: &RingPartition,
) -> Result<EstimateReport> {
    let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
    let inv_p = inv(params_u.p) + inv(params_v.p);
    let inv_q = inv(params_u.q) + inv(params_v.q);
    if inv_p > 1.0 + 1e-12 || inv_q > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "incompatible exponents: 1/p1 + 1/p2 = {inv_p}, 1/q1 + 1/q2 = {inv_q} must be <= 1"
        )));
    }
    let target = NormParams::ring(
        params_u.alpha + params_v.alpha,
        if inv_p == 0.0 { f64::INFINITY } else { 1.0 / inv_p },
        if inv_q == 0.0 { f64::INFINITY } else { 1.0 / inv_q },
    )?;
    let product = if u.is_scalar() {
        v.mul_scalar_field(u)?
    } else if v.is_scalar() {
        u.mul_scalar_field(v)?
    } else {
        u.dot(v)?
    };
    let lhs = herz_norm(&product, rings, &target)?;
    let rhs = herz_norm(u, rings, params_u)? * herz_norm(v, rings, params_v)?;
    let ceiling = 1.0 + 1e-9;
    let witness = format!(
        "product inequality: (a,p,q)=({},{},{}) x ({},{},{}) -> ({},{},{})",
        params_u.alpha, params_u.p, params_u.q, params_v.alpha, params_v.p, params_v.q,
        target.alpha, target.p, target.q
    );
    Ok(EstimateReport::new(lhs, rhs, ceiling, witness))
}

/// Convolution inequality: `‖φ∗u‖ ≤ C·M_φ·‖u‖` where `M_φ` is the largest
/// of the weighted masses `‖φ‖_{L¹}`, `‖|x|^β φ‖_{L¹}`,
/// `‖|x|^{2β+αp} φ‖_{L¹}` (the `alpha ≥ 0` regime). The convolution is the
/// periodic quadrature sum, evaluated spectrally.
pub fn check_young(
    phi: &Field,
    u: &Field,
    params: &NormParams,
    beta: f64,
    ceiling: f64,
    rings: &RingPartition,
) -> Result<EstimateReport> {
    phi.grid().ensure_same(u.grid(), "convolution")?;
    if !phi.is_scalar() {
        return Err(Error::InvalidParameter(
            "convolution kernel must be scalar".into(),
        ));
    }
    if params.alpha < 0.0 {
        return Err(Error::InvalidParameter(
            "convolution bound implemented for alpha >= 0".into(),
        ));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParameter("weight exponent beta must be positive".into()));
    }
    if params.alpha > 0.0 && params.p.is_infinite() {
        return Err(Error::InvalidParameter(
            "alpha > 0 requires finite p in the convolution bound".into(),
        ));
    }
    let grid = phi.grid();
    let vol = grid.length().powi(grid.dim() as i32);
    // Convolution theorem for the quadrature convolution: coefficients
    // multiply with an L^n factor under the series normalization.
    let conv_coeffs = u
        .spectral()
        .iter()
        .map(|uc| {
            let mut out = uc.clone();
            out.zip_mut_with(&phi.spectral()[0], |a, b| *a *= b * vol);
            out
        })
        .collect();
    let conv = Field::from_spectral(grid.clone(), conv_coeffs)?;

    let w = grid.cell_volume();
    let heavy_exp = 2.0 * beta + params.alpha * if params.p.is_finite() { params.p } else { 0.0 };
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for flat in 0..grid.size() {
        let a = phi.magnitude_at(flat) * w;
        let r = grid.radius(flat);
        m0 += a;
        m1 += r.powf(beta) * a;
        m2 += r.powf(heavy_exp) * a;
    }
    let mass = m0.max(m1).max(m2);
    let lhs = herz_norm(&conv, rings, params)?;
    let rhs = mass * herz_norm(u, rings, params)?;
    let witness = format!(
        "convolution bound: alpha={}, p={}, q={}, beta={beta}, masses=({m0:.6e},{m1:.6e},{m2:.6e})",
        params.alpha, params.p, params.q
    );
    Ok(EstimateReport::new(lhs, rhs, ceiling, witness))
}

/// Derivative ratios for frequency-localized fields.
#[derive(Clone, Debug)]
pub struct BernsteinReport {
    /// `‖∂^β u‖ / (2^{j|β|} ‖u‖)` — bounded for ball-limited fields.
    pub forward: EstimateReport,
    /// `2^{j|β|} ‖u‖ / ‖∂^β u‖` — additionally bounded on annuli.
    pub reverse: Option<EstimateReport>,
    pub ring_limited: bool,
}

const BAND_ENERGY_TOL: f64 = 1e-10;

/// Measure the derivative/scale ratio of a field localized at scale `2^j`.
/// The field must carry at least `1 − 1e-10` of its spectral energy in the
/// ball `|ξ| ≤ (8/3)2^j`; if it is additionally supported in the annulus
/// (negligible energy below `(3/4)2^j`) the reverse ratio is reported too.
pub fn bernstein_ratio(
    u: &Field,
    j: i32,
    beta: &[usize],
    params: &NormParams,
    ceiling: f64,
    rings: &RingPartition,
) -> Result<BernsteinReport> {
    let grid = u.grid();
    if beta.len() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "derivative multi-index has {} entries for dimension {}",
            beta.len(),
            grid.dim()
        )));
    }
    let scale = (j as f64).exp2();
    let ball_leak = u.spectral_energy_outside(0.0, scale * 8.0 / 3.0);
    if ball_leak > BAND_ENERGY_TOL {
        return Err(Error::BandLimit(format!(
            "energy fraction {ball_leak:.3e} outside the ball at scale 2^{j}"
        )));
    }
    let ring_leak = u.spectral_energy_outside(scale * 0.75, scale * 8.0 / 3.0);
    let ring_limited = ring_leak <= BAND_ENERGY_TOL;

    let mut du = u.clone();
    for (axis, &order) in beta.iter().enumerate() {
        for _ in 0..order {
            du = du.derivative(axis)?;
        }
    }
    let order: usize = beta.iter().sum();
    let weight = (j as f64 * order as f64).exp2();
    let norm_u = herz_norm(u, rings, params)?;
    let norm_du = herz_norm(&du, rings, params)?;
    let witness = format!(
        "derivative ratio: j={j}, beta={beta:?}, alpha={}, p={}, q={}",
        params.alpha, params.p, params.q
    );
    let forward = EstimateReport::new(norm_du, weight * norm_u, ceiling, witness.clone());
    let reverse = if ring_limited {
        Some(EstimateReport::new(
            weight * norm_u,
            norm_du,
            ceiling,
            format!("{witness} (reverse)"),
        ))
    } else {
        None
    };
    Ok(BernsteinReport {
        forward,
        reverse,
        ring_limited,
    })
}

/// Sup bound for ball-limited fields: `‖u‖_∞ ≤ C·2^{jn/p}·‖u‖` (ring norm
/// on the right).
pub fn linfty_herz_bound(
    u: &Field,
    j: i32,
    params: &NormParams,
    ceiling: f64,
    rings: &RingPartition,
) -> Result<EstimateReport> {
    let scale = (j as f64).exp2();
    let leak = u.spectral_energy_outside(0.0, scale * 8.0 / 3.0);
    if leak > BAND_ENERGY_TOL {
        return Err(Error::BandLimit(format!(
            "energy fraction {leak:.3e} outside the ball at scale 2^{j}"
        )));
    }
    let n_over_p = if params.p.is_finite() {
        u.grid().dim() as f64 / params.p
    } else {
        0.0
    };
    let lhs = u.max_abs();
    let rhs = (j as f64 * n_over_p).exp2() * herz_norm(u, rings, params)?;
    let witness = format!(
        "sup bound at scale 2^{j}: alpha={}, p={}, q={}",
        params.alpha, params.p, params.q
    );
    Ok(EstimateReport::new(lhs, rhs, ceiling, witness))
}
