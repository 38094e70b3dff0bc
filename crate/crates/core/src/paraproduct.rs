//! Frequency-interaction splitting of pointwise products and the
//! localization commutators built from it.
//!
//! With the dyadic blocks `Δ_i` (base block at index 0) and the prefix sums
//! `S_m = Σ_{i ≤ m} Δ_i`, a product splits into low-high, high-low and
//! near-diagonal interactions:
//!
//! ```text
//!   T_u v    = Σ_i S_{i-2}(u) Δ_i(v)            (low-high)
//!   𝓡(u, v) = Σ_i Δ_i(u) (Δ_{i-1}+Δ_i+Δ_{i+1})(v)
//!   R(u, v)  = Σ_i Δ_i(u) S_{i+1}(v)            (𝓡 plus high-low)
//!   uv       = T_u v + T_v u + 𝓡(u, v) = T_u v + R(u, v)
//! ```
//!
//! The identities are exact at grid level whenever both inputs are fully
//! reconstructed by the filter bank (spectrum inside the coverage radius).
//! On top of the splitting sit the two localization commutators used by the
//! transport and pressure analysis, each with a term-by-term breakdown, and
//! sweep-ready inequality checks returning [`EstimateReport`]s.

use crate::besov::besov_herz_norm;
use crate::dyadic::{BlockSet, Mode};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::frame::Frame;
use crate::herz::{herz_norm, lq_norm, NormParams};
use crate::report::EstimateReport;

/// Relative spectral energy allowed beyond the bank's coverage radius
/// before an inequality check accepts an input. The block sums truncate to
/// the bank's range, so unresolved high frequencies would silently fall out
/// of one side of an estimate.
pub const LEAKAGE_GATE: f64 = 1e-8;

const HYP_TOL: f64 = 1e-12;
const DIVERGENCE_TOL: f64 = 1e-10;

/// Pointwise product with component pairing: scalar·scalar and
/// scalar·vector multiply through; vector·vector contracts to the dot
/// product.
fn field_product(a: &Field, b: &Field) -> Result<Field> {
    if a.is_scalar() {
        b.mul_scalar_field(a)
    } else if b.is_scalar() {
        a.mul_scalar_field(b)
    } else {
        a.dot(b)
    }
}

fn accumulate(acc: &mut Option<Field>, term: Field) -> Result<()> {
    *acc = Some(match acc.take() {
        None => term,
        Some(a) => a.add(&term)?,
    });
    Ok(())
}

fn take_or_zeros(acc: Option<Field>, like: &Field) -> Result<Field> {
    match acc {
        Some(f) => Ok(f),
        None => Field::zeros(like.grid().clone(), like.components()),
    }
}

/// `T_low(high) = Σ_i S_{i-2}(low) Δ_i(high)`.
fn paraproduct_sum(low: &BlockSet, high: &BlockSet) -> Result<Option<Field>> {
    let mut acc = None;
    for i in 0..high.len() {
        if let Some(pre) = low.prefix_upto(i as isize - 2) {
            accumulate(&mut acc, field_product(pre, high.block_at(i))?)?;
        }
    }
    Ok(acc)
}

/// `R(a, b) = Σ_i Δ_i(a) S_{i+1}(b)` (prefix clamped at the top of the
/// bank, matching the truncation of the block family).
fn wide_remainder_sum(a: &BlockSet, b: &BlockSet) -> Result<Option<Field>> {
    let mut acc = None;
    for i in 0..a.len() {
        let pre = b
            .prefix_upto(i as isize + 1)
            .expect("index i + 1 is never negative");
        accumulate(&mut acc, field_product(a.block_at(i), pre)?)?;
    }
    Ok(acc)
}

/// `𝓡(a, b) = Σ_i Δ_i(a) (Δ_{i-1} + Δ_i + Δ_{i+1})(b)`.
fn diagonal_sum(a: &BlockSet, b: &BlockSet) -> Result<Option<Field>> {
    let mut acc = None;
    for i in 0..a.len() {
        for off in -1isize..=1 {
            let l = i as isize + off;
            if l < 0 || l >= b.len() as isize {
                continue;
            }
            accumulate(
                &mut acc,
                field_product(a.block_at(i), b.block_at(l as usize))?,
            )?;
        }
    }
    Ok(acc)
}

/// The four interaction pieces of a pointwise product.
#[derive(Debug)]
pub struct ProductSplit {
    /// `T_u v`: low frequencies of the first factor against blocks of the
    /// second.
    pub low_high: Field,
    /// `T_v u`: the mirrored paraproduct.
    pub high_low: Field,
    /// `𝓡(u, v)`: near-diagonal block pairs (offsets −1, 0, 1).
    pub diagonal: Field,
    /// `R(u, v) = 𝓡(u, v) + T_v u`: everything except `T_u v`.
    pub wide_remainder: Field,
}

/// Split the product `uv` into its frequency-interaction parts. Both
/// two-term (`low_high + wide_remainder`) and three-term
/// (`low_high + high_low + diagonal`) groupings reproduce the pointwise
/// product exactly on band-limited inputs.
pub fn bony_parts(u: &Field, v: &Field, frame: &Frame) -> Result<ProductSplit> {
    frame.grid().ensure_same(u.grid(), "product split")?;
    frame.grid().ensure_same(v.grid(), "product split")?;
    let bank = frame.bank();
    let bu = bank.decompose(u, Mode::NonHomogeneous)?;
    let bv = bank.decompose(v, Mode::NonHomogeneous)?;
    let like = field_product(u, v)?;
    Ok(ProductSplit {
        low_high: take_or_zeros(paraproduct_sum(&bu, &bv)?, &like)?,
        high_low: take_or_zeros(paraproduct_sum(&bv, &bu)?, &like)?,
        diagonal: take_or_zeros(diagonal_sum(&bu, &bv)?, &like)?,
        wide_remainder: take_or_zeros(wide_remainder_sum(&bu, &bv)?, &like)?,
    })
}

/// Term-by-term breakdown of a localization commutator. `terms` follows
/// the documented order of the parent operation; `total` is their sum and
/// must match the directly computed commutator up to roundoff.
#[derive(Debug)]
pub struct CommutatorBreakdown {
    pub terms: Vec<Field>,
    pub total: Field,
}

impl CommutatorBreakdown {
    fn from_terms(terms: Vec<Field>) -> Result<CommutatorBreakdown> {
        let mut total = terms[0].clone();
        for t in &terms[1..] {
            total = total.add(t)?;
        }
        Ok(CommutatorBreakdown { terms, total })
    }

    /// Relative L² distance between the term sum and a direct evaluation.
    pub fn relative_deviation(&self, direct: &Field) -> Result<f64> {
        self.total.relative_l2_gap(direct)
    }
}

fn ensure_velocity(v: &Field, n: usize) -> Result<()> {
    if v.components() != n {
        return Err(Error::InvalidParameter(format!(
            "advecting field must have {n} components, got {}",
            v.components()
        )));
    }
    let div = v.relative_divergence()?;
    if div > DIVERGENCE_TOL {
        return Err(Error::InvalidParameter(format!(
            "advecting field must be divergence-free: relative divergence {div:.3e}"
        )));
    }
    Ok(())
}

/// Commutator between the block filter at index `j` and advection by a
/// divergence-free field: `Δ_j(v·∇u) − v·∇(Δ_j u)`.
///
/// Returns the directly evaluated commutator together with a four-term
/// breakdown, in order:
///
/// 1. `Δ_j 𝓡(v, ∇u)` — near-diagonal pairs, then localized;
/// 2. `Δ_j T_{∇u} v` — gradient as the low factor, then localized;
/// 3. `−R(v, Δ_j ∇u)` — wide remainder against the localized gradient;
/// 4. `Δ_j T_v ∇u − T_v Δ_j ∇u` — the paraproduct's own localization
///    defect.
///
/// The breakdown sums to the direct value exactly (up to roundoff) when
/// `u` and `v` are band-limited within the bank's coverage radius.
pub fn commutator_transport(
    v: &Field,
    u: &Field,
    j: i32,
    frame: &Frame,
) -> Result<(Field, CommutatorBreakdown)> {
    let grid = frame.grid();
    grid.ensure_same(v.grid(), "transport commutator")?;
    grid.ensure_same(u.grid(), "transport commutator")?;
    let n = grid.dim();
    ensure_velocity(v, n)?;
    let bank = frame.bank();
    let mode = Mode::NonHomogeneous;

    let advected = Field::advect(v, u)?;
    let direct = bank
        .block(&advected, j, mode)?
        .sub(&Field::advect(v, &bank.block(u, j, mode)?)?)?;

    let v_sets: Vec<BlockSet> = (0..n)
        .map(|i| bank.decompose(&v.extract_component(i)?, mode))
        .collect::<Result<_>>()?;

    let comps = u.components();
    let mut per_term: Vec<Vec<Field>> = vec![Vec::with_capacity(comps); 4];
    for m in 0..comps {
        let um = u.extract_component(m)?;
        let grads: Vec<Field> = (0..n).map(|i| um.derivative(i)).collect::<Result<_>>()?;
        let grad_sets: Vec<BlockSet> = grads
            .iter()
            .map(|g| bank.decompose(g, mode))
            .collect::<Result<_>>()?;

        let mut diag = None;
        let mut reverse_para = None;
        let mut para = None;
        for i in 0..n {
            if let Some(t) = diagonal_sum(&v_sets[i], &grad_sets[i])? {
                accumulate(&mut diag, t)?;
            }
            if let Some(t) = paraproduct_sum(&grad_sets[i], &v_sets[i])? {
                accumulate(&mut reverse_para, t)?;
            }
            if let Some(t) = paraproduct_sum(&v_sets[i], &grad_sets[i])? {
                accumulate(&mut para, t)?;
            }
        }

        let mut wide = None;
        let mut para_localized = None;
        for i in 0..n {
            let localized = bank.block(&grads[i], j, mode)?;
            let loc_set = bank.decompose(&localized, mode)?;
            if let Some(t) = wide_remainder_sum(&v_sets[i], &loc_set)? {
                accumulate(&mut wide, t)?;
            }
            if let Some(t) = paraproduct_sum(&v_sets[i], &loc_set)? {
                accumulate(&mut para_localized, t)?;
            }
        }

        let zero_like = um.scale(0.0)?;
        let term1 = bank.block(&take_or_zeros(diag, &zero_like)?, j, mode)?;
        let term2 = bank.block(&take_or_zeros(reverse_para, &zero_like)?, j, mode)?;
        let term3 = take_or_zeros(wide, &zero_like)?.scale(-1.0)?;
        let term4 = bank
            .block(&take_or_zeros(para, &zero_like)?, j, mode)?
            .sub(&take_or_zeros(para_localized, &zero_like)?)?;
        for (slot, term) in per_term.iter_mut().zip([term1, term2, term3, term4]) {
            slot.push(term);
        }
    }

    let terms: Vec<Field> = per_term
        .into_iter()
        .map(|fields| {
            if comps == 1 {
                Ok(fields.into_iter().next().expect("one component"))
            } else {
                Field::from_components(grid.clone(), fields)
            }
        })
        .collect::<Result<_>>()?;
    Ok((direct, CommutatorBreakdown::from_terms(terms)?))
}

/// Commutator between the block filter at index `j` and multiplication by
/// a scalar coefficient: `Δ_j(a g) − a Δ_j(g)`, applied per component of
/// `g`. The three-term breakdown, in order:
///
/// 1. `Δ_j T_a g − T_a Δ_j g` — the paraproduct's localization defect;
/// 2. `Δ_j R(a, g)` — wide remainder, then localized;
/// 3. `−R(a, Δ_j g)` — wide remainder against the localized field.
pub fn commutator_pressure(
    a: &Field,
    gpi: &Field,
    j: i32,
    frame: &Frame,
) -> Result<(Field, CommutatorBreakdown)> {
    let grid = frame.grid();
    grid.ensure_same(a.grid(), "coefficient commutator")?;
    grid.ensure_same(gpi.grid(), "coefficient commutator")?;
    if !a.is_scalar() {
        return Err(Error::InvalidParameter(
            "coefficient commutator expects a scalar coefficient".into(),
        ));
    }
    let bank = frame.bank();
    let mode = Mode::NonHomogeneous;

    let product = gpi.mul_scalar_field(a)?;
    let direct = bank
        .block(&product, j, mode)?
        .sub(&bank.block(gpi, j, mode)?.mul_scalar_field(a)?)?;

    let a_set = bank.decompose(a, mode)?;
    let comps = gpi.components();
    let mut per_term: Vec<Vec<Field>> = vec![Vec::with_capacity(comps); 3];
    for c in 0..comps {
        let g = gpi.extract_component(c)?;
        let g_set = bank.decompose(&g, mode)?;
        let localized = bank.block(&g, j, mode)?;
        let loc_set = bank.decompose(&localized, mode)?;

        let zero_like = g.scale(0.0)?;
        let para = take_or_zeros(paraproduct_sum(&a_set, &g_set)?, &zero_like)?;
        let para_localized = take_or_zeros(paraproduct_sum(&a_set, &loc_set)?, &zero_like)?;
        let term1 = bank.block(&para, j, mode)?.sub(&para_localized)?;
        let wide = take_or_zeros(wide_remainder_sum(&a_set, &g_set)?, &zero_like)?;
        let term2 = bank.block(&wide, j, mode)?;
        let term3 = take_or_zeros(wide_remainder_sum(&a_set, &loc_set)?, &zero_like)?.scale(-1.0)?;
        for (slot, term) in per_term.iter_mut().zip([term1, term2, term3]) {
            slot.push(term);
        }
    }

    let terms: Vec<Field> = per_term
        .into_iter()
        .map(|fields| {
            if comps == 1 {
                Ok(fields.into_iter().next().expect("one component"))
            } else {
                Field::from_components(grid.clone(), fields)
            }
        })
        .collect::<Result<_>>()?;
    Ok((direct, CommutatorBreakdown::from_terms(terms)?))
}

/// Reject inputs whose spectrum leaks past the bank's coverage radius;
/// the interaction sums truncate there, so such energy would disappear
/// from one side of an inequality.
fn ensure_band_limited(fields: &[(&str, &Field)], frame: &Frame) -> Result<()> {
    let radius = frame.bank().coverage_radius();
    for (name, f) in fields {
        let leak = f.spectral_energy_outside(0.0, radius);
        if leak > LEAKAGE_GATE {
            return Err(Error::BandLimit(format!(
                "{name} carries {leak:.3e} of its spectral energy beyond the coverage radius {radius:.3} (gate {LEAKAGE_GATE:.0e})"
            )));
        }
    }
    Ok(())
}

/// Largest pointwise gradient entry across all components.
fn sup_gradient(u: &Field) -> Result<f64> {
    let mut worst = 0.0f64;
    for c in 0..u.components() {
        worst = worst.max(u.extract_component(c)?.gradient()?.max_abs());
    }
    Ok(worst)
}

/// `Σ_{i,m} ∂_i u_m ∂_m v_i`: the divergence of `u·∇v` for
/// divergence-free `v`, written without second derivatives.
fn gradient_contraction(u: &Field, v: &Field) -> Result<Field> {
    let n = u.grid().dim();
    let mut acc = None;
    for i in 0..n {
        for m in 0..n {
            let du = u.extract_component(m)?.derivative(i)?;
            let dv = v.extract_component(i)?.derivative(m)?;
            accumulate(&mut acc, du.mul_scalar_field(&dv)?)?;
        }
    }
    acc.ok_or_else(|| Error::InvalidParameter("empty contraction".into()))
}

fn require(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg))
    }
}

/// Require `s ≥ threshold`, with `r = 1` when `s` sits exactly at the
/// threshold (the critical index of the corresponding estimate).
fn require_at_least_critical(params: &NormParams, threshold: f64, label: &str) -> Result<()> {
    require(
        params.s >= threshold - HYP_TOL,
        format!("{label} requires s >= {threshold}, got s = {}", params.s),
    )?;
    if (params.s - threshold).abs() <= HYP_TOL {
        require(
            params.r == 1.0,
            format!("{label} at critical s = {threshold} requires r = 1, got r = {}", params.r),
        )?;
    }
    Ok(())
}

/// Which product inequality to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductVariant {
    /// `‖uv‖_{s} ≤ C(‖u‖_∞ ‖v‖_{s} + ‖v‖_∞ ‖u‖_{s})`, `s > 0`.
    Algebra,
    /// `‖u·∇v‖_{s−1} ≤ C ‖u‖_{s−1} ‖v‖_{s}`, `s ≥ n/p + 1`.
    Advection,
    /// `‖div(u·∇v)‖_{s−1} ≤ C ‖u‖_{s} ‖v‖_{s}` for divergence-free `v`.
    AdvectionDivergence,
}

impl ProductVariant {
    pub fn parse(token: &str) -> Result<ProductVariant> {
        match token {
            "i" => Ok(ProductVariant::Algebra),
            "ii_grad" => Ok(ProductVariant::Advection),
            "ii_div" => Ok(ProductVariant::AdvectionDivergence),
            other => Err(Error::InvalidParameter(format!(
                "unknown product variant '{other}' (expected i, ii_grad, ii_div)"
            ))),
        }
    }

    fn token(&self) -> &'static str {
        match self {
            ProductVariant::Algebra => "i",
            ProductVariant::Advection => "ii_grad",
            ProductVariant::AdvectionDivergence => "ii_div",
        }
    }
}

/// Evaluate one product inequality on a concrete pair of fields. The
/// report's `pass` flag compares against `ceiling`; the fitted constant is
/// the observed `lhs/rhs` ratio.
pub fn check_product_estimate(
    u: &Field,
    v: &Field,
    params: &NormParams,
    variant: ProductVariant,
    frame: &Frame,
    ceiling: f64,
) -> Result<EstimateReport> {
    frame.grid().ensure_same(u.grid(), "product estimate")?;
    frame.grid().ensure_same(v.grid(), "product estimate")?;
    ensure_band_limited(&[("first factor", u), ("second factor", v)], frame)?;
    let n = frame.grid().dim() as f64;
    let mode = Mode::NonHomogeneous;

    let (lhs, rhs, extra) = match variant {
        ProductVariant::Algebra => {
            require(params.s > 0.0, format!("algebra estimate requires s > 0, got {}", params.s))?;
            require(
                u.is_scalar() || v.is_scalar(),
                "algebra estimate takes a scalar factor".into(),
            )?;
            let product = field_product(u, v)?;
            let lhs = besov_herz_norm(&product, frame, params, mode)?.0;
            let rhs = u.max_abs() * besov_herz_norm(v, frame, params, mode)?.0
                + v.max_abs() * besov_herz_norm(u, frame, params, mode)?.0;
            (lhs, rhs, String::new())
        }
        ProductVariant::Advection => {
            require(
                params.p.is_finite() && params.alpha >= 0.0,
                format!("advection estimate requires p < inf and alpha >= 0, got p = {}, alpha = {}", params.p, params.alpha),
            )?;
            require_at_least_critical(params, n / params.p + 1.0, "advection estimate")?;
            require(
                u.components() == frame.grid().dim(),
                "advecting factor must be a velocity-shaped vector field".into(),
            )?;
            let advected = Field::advect(u, v)?;
            let lowered = params.with_s(params.s - 1.0);
            let lhs = besov_herz_norm(&advected, frame, &lowered, mode)?.0;
            let rhs = besov_herz_norm(u, frame, &lowered, mode)?.0
                * besov_herz_norm(v, frame, params, mode)?.0;
            (lhs, rhs, String::new())
        }
        ProductVariant::AdvectionDivergence => {
            require(
                params.p.is_finite() && params.alpha >= 0.0,
                format!("divergence-form estimate requires p < inf and alpha >= 0, got p = {}, alpha = {}", params.p, params.alpha),
            )?;
            require_at_least_critical(params, n / params.p + 1.0, "divergence-form estimate")?;
            let dim = frame.grid().dim();
            require(
                u.components() == dim && v.components() == dim,
                "divergence-form estimate takes two vector fields".into(),
            )?;
            let div_v = v.relative_divergence()?;
            require(
                div_v <= DIVERGENCE_TOL,
                format!("second factor must be divergence-free, relative divergence {div_v:.3e}"),
            )?;
            let contraction = gradient_contraction(u, v)?;
            let direct = Field::advect(u, v)?.divergence()?;
            let gap = contraction.relative_l2_gap(&direct)?;
            if gap > 1e-9 {
                return Err(Error::BandLimit(format!(
                    "gradient-contraction form of div(u·∇v) disagrees with the direct divergence by {gap:.3e}; inputs are not resolved well enough"
                )));
            }
            let lowered = params.with_s(params.s - 1.0);
            let lhs = besov_herz_norm(&contraction, frame, &lowered, mode)?.0;
            let rhs = besov_herz_norm(u, frame, params, mode)?.0
                * besov_herz_norm(v, frame, params, mode)?.0;
            (lhs, rhs, format!(" contraction_gap={gap:.3e}"))
        }
    };

    Ok(EstimateReport::new(
        lhs,
        rhs,
        ceiling,
        format!(
            "product variant={} alpha={} p={} q={} r={} s={}{}",
            variant.token(),
            params.alpha,
            params.p,
            params.q,
            params.r,
            params.s,
            extra
        ),
    ))
}

/// Weight scale for the block-aggregated left-hand sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportVariant {
    /// Weights `2^{sj}`; right-hand side mixes sup-norm gradients with
    /// smoothness-`s` norms. Needs `s > 0`.
    SameOrder,
    /// Weights `2^{(s−1)j}`; right-hand side `‖u‖_{s−1} ‖v‖_{s}`. Needs
    /// `s ≥ n/p + 1` (`r = 1` at equality).
    Lowered,
}

impl TransportVariant {
    pub fn parse(token: &str) -> Result<TransportVariant> {
        match token {
            "s" => Ok(TransportVariant::SameOrder),
            "s_minus_1" => Ok(TransportVariant::Lowered),
            other => Err(Error::InvalidParameter(format!(
                "unknown transport-commutator variant '{other}' (expected s, s_minus_1)"
            ))),
        }
    }

    fn token(&self) -> &'static str {
        match self {
            TransportVariant::SameOrder => "s",
            TransportVariant::Lowered => "s_minus_1",
        }
    }
}

/// Block-aggregated size of the advection commutator: for each block index
/// the Herz norm of `Δ_j(v·∇u) − v·∇Δ_j u`, weighted dyadically and
/// aggregated in `ℓ^r`.
fn commutator_transport_lhs(
    v: &Field,
    u: &Field,
    frame: &Frame,
    params: &NormParams,
    weight_s: f64,
) -> Result<f64> {
    let bank = frame.bank();
    let mode = Mode::NonHomogeneous;
    let advected = Field::advect(v, u)?;
    let mut weighted = Vec::with_capacity(bank.len());
    for j in bank.j_min()..=bank.j_max() {
        let commutator = bank
            .block(&advected, j, mode)?
            .sub(&Field::advect(v, &bank.block(u, j, mode)?)?)?;
        let ring = herz_norm(&commutator, frame.rings(), params)?;
        weighted.push((weight_s * bank.paper_index(j) as f64).exp2() * ring);
    }
    Ok(lq_norm(weighted.into_iter(), params.r))
}

/// Evaluate one advection-commutator inequality on a concrete pair.
pub fn check_commutator_transport(
    v: &Field,
    u: &Field,
    params: &NormParams,
    variant: TransportVariant,
    frame: &Frame,
    ceiling: f64,
) -> Result<EstimateReport> {
    let grid = frame.grid();
    grid.ensure_same(v.grid(), "transport commutator estimate")?;
    grid.ensure_same(u.grid(), "transport commutator estimate")?;
    let n = grid.dim();
    ensure_velocity(v, n)?;
    ensure_band_limited(&[("advecting field", v), ("advected field", u)], frame)?;
    require(
        params.p.is_finite() && params.alpha >= 0.0,
        format!("commutator estimates require p < inf and alpha >= 0, got p = {}, alpha = {}", params.p, params.alpha),
    )?;
    let mode = Mode::NonHomogeneous;

    let (lhs, rhs) = match variant {
        TransportVariant::SameOrder => {
            require(params.s > 0.0, format!("same-order variant requires s > 0, got {}", params.s))?;
            let lhs = commutator_transport_lhs(v, u, frame, params, params.s)?;
            let rhs = sup_gradient(u)? * besov_herz_norm(v, frame, params, mode)?.0
                + sup_gradient(v)? * besov_herz_norm(u, frame, params, mode)?.0;
            (lhs, rhs)
        }
        TransportVariant::Lowered => {
            require_at_least_critical(params, n as f64 / params.p + 1.0, "lowered variant")?;
            let lhs = commutator_transport_lhs(v, u, frame, params, params.s - 1.0)?;
            let lowered = params.with_s(params.s - 1.0);
            let rhs = besov_herz_norm(u, frame, &lowered, mode)?.0
                * besov_herz_norm(v, frame, params, mode)?.0;
            (lhs, rhs)
        }
    };

    Ok(EstimateReport::new(
        lhs,
        rhs,
        ceiling,
        format!(
            "transport-commutator variant={} alpha={} p={} q={} r={} s={}",
            variant.token(),
            params.alpha,
            params.p,
            params.q,
            params.r,
            params.s
        ),
    ))
}

/// Which coefficient-commutator inequality to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureVariant {
    /// Weights `2^{sj}`, sup-norm mixed right-hand side; `s > 0`.
    SupMixed,
    /// Weights `2^{sj}`, `‖a‖_{s} ‖g‖_{s}`; `s ≥ n/p` (`r = 1` at
    /// equality).
    SameOrder,
    /// Weights `2^{(s−1)j}`, `‖a‖_{s} ‖g‖_{s−1}`; `s ≥ n/p + 1` (`r = 1`
    /// at equality).
    Lowered,
}

impl PressureVariant {
    pub fn parse(token: &str) -> Result<PressureVariant> {
        match token {
            "i" => Ok(PressureVariant::SupMixed),
            "ii" => Ok(PressureVariant::SameOrder),
            "iii" => Ok(PressureVariant::Lowered),
            other => Err(Error::InvalidParameter(format!(
                "unknown coefficient-commutator variant '{other}' (expected i, ii, iii)"
            ))),
        }
    }

    fn token(&self) -> &'static str {
        match self {
            PressureVariant::SupMixed => "i",
            PressureVariant::SameOrder => "ii",
            PressureVariant::Lowered => "iii",
        }
    }
}

/// Evaluate one coefficient-commutator inequality on a concrete pair
/// (scalar coefficient `a`, field `gpi`, typically a pressure gradient).
pub fn check_commutator_pressure(
    a: &Field,
    gpi: &Field,
    params: &NormParams,
    variant: PressureVariant,
    frame: &Frame,
    ceiling: f64,
) -> Result<EstimateReport> {
    let grid = frame.grid();
    grid.ensure_same(a.grid(), "coefficient commutator estimate")?;
    grid.ensure_same(gpi.grid(), "coefficient commutator estimate")?;
    require(a.is_scalar(), "coefficient must be a scalar field".into())?;
    ensure_band_limited(&[("coefficient", a), ("multiplied field", gpi)], frame)?;
    require(
        params.p.is_finite() && params.alpha >= 0.0,
        format!("commutator estimates require p < inf and alpha >= 0, got p = {}, alpha = {}", params.p, params.alpha),
    )?;
    let n = grid.dim() as f64;
    let bank = frame.bank();
    let mode = Mode::NonHomogeneous;

    let weight_s = match variant {
        PressureVariant::SupMixed => {
            require(params.s > 0.0, format!("variant i requires s > 0, got {}", params.s))?;
            params.s
        }
        PressureVariant::SameOrder => {
            require_at_least_critical(params, n / params.p, "variant ii")?;
            params.s
        }
        PressureVariant::Lowered => {
            require_at_least_critical(params, n / params.p + 1.0, "variant iii")?;
            params.s - 1.0
        }
    };

    let product = gpi.mul_scalar_field(a)?;
    let mut weighted = Vec::with_capacity(bank.len());
    for j in bank.j_min()..=bank.j_max() {
        let commutator = bank
            .block(&product, j, mode)?
            .sub(&bank.block(gpi, j, mode)?.mul_scalar_field(a)?)?;
        let ring = herz_norm(&commutator, frame.rings(), params)?;
        weighted.push((weight_s * bank.paper_index(j) as f64).exp2() * ring);
    }
    let lhs = lq_norm(weighted.into_iter(), params.r);

    let rhs = match variant {
        PressureVariant::SupMixed => {
            gpi.max_abs() * besov_herz_norm(a, frame, params, mode)?.0
                + a.max_abs() * besov_herz_norm(gpi, frame, params, mode)?.0
        }
        PressureVariant::SameOrder => {
            besov_herz_norm(a, frame, params, mode)?.0
                * besov_herz_norm(gpi, frame, params, mode)?.0
        }
        PressureVariant::Lowered => {
            let lowered = params.with_s(params.s - 1.0);
            besov_herz_norm(a, frame, params, mode)?.0
                * besov_herz_norm(gpi, frame, &lowered, mode)?.0
        }
    };

    Ok(EstimateReport::new(
        lhs,
        rhs,
        ceiling,
        format!(
            "coefficient-commutator variant={} alpha={} p={} q={} r={} s={}",
            variant.token(),
            params.alpha,
            params.p,
            params.q,
            params.r,
            params.s
        ),
    ))
}
