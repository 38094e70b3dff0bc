//! Smoothness-weighted block norms built on the dyadic bank and the ring
//! norms.
//!
//! For a block decomposition `Δ_j u` (either mode) the norm is
//!
//! ```text
//!   ‖u‖ = ( Σ_j (2^{s·ĵ} ‖Δ_j u‖_ring)^r )^{1/r},   ĵ = j − j_min − 1,
//! ```
//!
//! the shifted index giving the base block the classical weight `2^{-s}`
//! regardless of grid resolution. The companion potential norm applies the
//! radial multiplier `|ξ|^s` (zero mode dropped) before taking the ring
//! norm; for positive `s` the two sides are equivalent up to fixed
//! constants, which [`check_norm_equivalence`] measures in both directions.

use serde::Serialize;

use crate::dyadic::Mode;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::frame::Frame;
use crate::herz::{herz_norm, lq_norm, NormParams};
use crate::report::EstimateReport;

/// Per-block contribution to a block norm.
#[derive(Clone, Debug, Serialize)]
pub struct BlockNorm {
    /// Bank index (physical scale `2^j`).
    pub j: i32,
    /// Shifted classical index `j − j_min − 1`.
    pub paper_j: i32,
    /// Ring norm of the block.
    pub ring_norm: f64,
    /// `2^{s·paper_j}` times the ring norm.
    pub weighted: f64,
}

/// Full per-block breakdown accompanying a block-norm value.
#[derive(Clone, Debug, Serialize)]
pub struct BesovBreakdown {
    pub mode_homogeneous: bool,
    pub blocks: Vec<BlockNorm>,
}

/// Smoothness-weighted block norm of `u`; returns the value and the
/// per-block breakdown.
pub fn besov_herz_norm(
    u: &Field,
    frame: &Frame,
    params: &NormParams,
    mode: Mode,
) -> Result<(f64, BesovBreakdown)> {
    let bank = frame.bank();
    bank.grid().ensure_same(u.grid(), "block norm")?;
    let mut blocks = Vec::with_capacity(bank.len());
    for j in bank.j_min()..=bank.j_max() {
        let block = bank.block(u, j, mode)?;
        let ring_norm = herz_norm(&block, frame.rings(), params)?;
        let paper_j = bank.paper_index(j);
        let weighted = (params.s * paper_j as f64).exp2() * ring_norm;
        blocks.push(BlockNorm {
            j,
            paper_j,
            ring_norm,
            weighted,
        });
    }
    let value = lq_norm(blocks.iter().map(|b| b.weighted), params.r);
    Ok((
        value,
        BesovBreakdown {
            mode_homogeneous: mode == Mode::Homogeneous,
            blocks,
        },
    ))
}

/// Potential-space norm: ring norm of `F^{-1}[|ξ|^s F u]`, zero mode
/// dropped.
pub fn sobolev_herz_norm(u: &Field, frame: &Frame, params: &NormParams) -> Result<f64> {
    frame.grid().ensure_same(u.grid(), "potential norm")?;
    let s = params.s;
    let lifted = u.apply_multiplier(|xi| {
        let r2 = xi.iter().map(|x| x * x).sum::<f64>();
        if r2 == 0.0 {
            0.0
        } else {
            r2.sqrt().powf(s)
        }
    })?;
    herz_norm(&lifted, frame.rings(), params)
}

/// Two-sided comparison of the nonhomogeneous block norm with the sum of
/// the homogeneous block norm and the plain ring norm (`s > 0` required).
/// Returns the fitted constants for both directions.
pub fn check_norm_equivalence(
    u: &Field,
    frame: &Frame,
    params: &NormParams,
    ceiling: f64,
) -> Result<(EstimateReport, EstimateReport)> {
    if params.s <= 0.0 {
        return Err(Error::InvalidParameter(
            "norm equivalence requires s > 0".into(),
        ));
    }
    let (nonhomog, _) = besov_herz_norm(u, frame, params, Mode::NonHomogeneous)?;
    let (homog, _) = besov_herz_norm(u, frame, params, Mode::Homogeneous)?;
    let ring = herz_norm(u, frame.rings(), params)?;
    let combined = homog + ring;
    let witness = format!(
        "norm equivalence: alpha={}, p={}, q={}, r={}, s={}",
        params.alpha, params.p, params.q, params.r, params.s
    );
    let forward = EstimateReport::new(nonhomog, combined, ceiling, witness.clone());
    let backward = EstimateReport::new(combined, nonhomog, ceiling, format!("{witness} (reverse)"));
    Ok((forward, backward))
}

/// Sup-norm embedding: `‖u‖_∞ ≤ C‖u‖` for the nonhomogeneous block norm
/// when `s > n/p` (any `r`) or `s = n/p` with `r = 1`, `alpha ≥ 0`.
pub fn check_linfty_embedding(
    u: &Field,
    frame: &Frame,
    params: &NormParams,
    ceiling: f64,
) -> Result<EstimateReport> {
    let n_over_p = if params.p.is_finite() {
        u.grid().dim() as f64 / params.p
    } else {
        0.0
    };
    let strict = params.s > n_over_p + 1e-12;
    let critical = (params.s - n_over_p).abs() <= 1e-12;
    if !(strict || (critical && params.r == 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "sup embedding needs s > n/p, or s = n/p with r = 1; got s = {}, n/p = {n_over_p}, r = {}",
            params.s, params.r
        )));
    }
    if params.alpha < 0.0 {
        return Err(Error::InvalidParameter(
            "sup embedding requires alpha >= 0".into(),
        ));
    }
    let lhs = u.max_abs();
    let (rhs, _) = besov_herz_norm(u, frame, params, Mode::NonHomogeneous)?;
    let witness = format!(
        "sup embedding: alpha={}, p={}, q={}, r={}, s={}",
        params.alpha, params.p, params.q, params.r, params.s
    );
    Ok(EstimateReport::new(lhs, rhs, ceiling, witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn embedding_hypotheses_are_enforced() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let frame = Frame::new(&grid).unwrap();
        let u = Field::constant(grid, 1.0).unwrap();
        // s = n/p with r = infinity violates the critical-case requirement.
        let params = NormParams::new(0.0, 2.0, 1.0, f64::INFINITY, 1.0).unwrap();
        assert!(check_linfty_embedding(&u, &frame, &params, 16.0).is_err());
        // s = n/p with r = 1 is admissible.
        let params = NormParams::new(0.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!(check_linfty_embedding(&u, &frame, &params, 16.0).is_ok());
        // negative weight is rejected
        let params = NormParams::new(-0.5, 2.0, 1.0, 1.0, 2.0).unwrap();
        assert!(check_linfty_embedding(&u, &frame, &params, 16.0).is_err());
    }

    #[test]
    fn equivalence_requires_positive_smoothness() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let frame = Frame::new(&grid).unwrap();
        let u = Field::constant(grid, 1.0).unwrap();
        let params = NormParams::new(0.0, 2.0, 2.0, 2.0, 0.0).unwrap();
        assert!(check_norm_equivalence(&u, &frame, &params, 16.0).is_err());
    }
}
