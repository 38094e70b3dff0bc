//! Characteristic flow maps and semi-Lagrangian transport.
//!
//! Trajectories of `dX/dt = v(X, t)` are integrated pointwise with a
//! classical fourth-order one-step method, evaluating the velocity off the
//! grid through [`crate::interp`]. A [`FlowMap`] stores forward and
//! backward displacement fields; transport of a scalar or vector quantity
//! is composition with the backward map, `a(x, t) = a₀(X⁻¹(x, t))`, which
//! preserves extrema up to interpolation overshoot and is
//! unconditionally stable (a step bound is still enforced to keep the
//! trajectory integration accurate).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::herz::{herz_norm, NormParams, RingPartition};
use crate::interp;
use crate::report::EstimateReport;

/// Velocity (or any field) defined for a continuous time range: the
/// trajectory integrator only needs point evaluation plus a few global
/// queries.
pub trait TimeField: Sync {
    fn grid(&self) -> &Grid;
    fn components(&self) -> usize;
    /// Closed time interval on which evaluation is meaningful.
    fn time_range(&self) -> (f64, f64);
    /// Value at an arbitrary physical point (periodic wrap) and time.
    fn eval(&self, x: &[f64], t: f64, out: &mut [f64]);
    /// The field materialized on its grid at time `t`.
    fn at_time(&self, t: f64) -> Result<Field>;
    /// Largest pointwise magnitude over the stored content.
    fn max_abs(&self) -> f64;
    /// Worst relative divergence over the stored content.
    fn solenoidal_defect(&self) -> Result<f64>;
}

/// A velocity field constant in time.
pub struct SteadyField {
    field: Field,
}

impl SteadyField {
    pub fn new(field: Field) -> SteadyField {
        SteadyField { field }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
}

impl TimeField for SteadyField {
    fn grid(&self) -> &Grid {
        self.field.grid()
    }

    fn components(&self) -> usize {
        self.field.components()
    }

    fn time_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn eval(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        interp::sample(&self.field, x, out);
    }

    fn at_time(&self, _t: f64) -> Result<Field> {
        Ok(self.field.clone())
    }

    fn max_abs(&self) -> f64 {
        self.field.max_abs()
    }

    fn solenoidal_defect(&self) -> Result<f64> {
        self.field.relative_divergence()
    }
}

/// A field stored as time slices on a shared grid, interpolated between
/// slices by local cubic (4-point Lagrange) weights in time.
pub struct SampledTimeField {
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl SampledTimeField {
    pub fn new(times: Vec<f64>, fields: Vec<Field>) -> Result<SampledTimeField> {
        if times.len() != fields.len() {
            return Err(Error::InvalidParameter(format!(
                "time series needs one field per time: {} times, {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidParameter(
                "time series needs at least two slices".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "sample times must be finite and strictly increasing".into(),
            ));
        }
        let grid = fields[0].grid().clone();
        let comps = fields[0].components();
        for f in &fields[1..] {
            grid.ensure_same(f.grid(), "time series")?;
            if f.components() != comps {
                return Err(Error::InvalidParameter(
                    "time series slices must share a component count".into(),
                ));
            }
        }
        Ok(SampledTimeField { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn slice(&self, k: usize) -> &Field {
        &self.fields[k]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time stencil for `t`: start index and Lagrange weights over up to
    /// four consecutive slices.
    fn time_weights(&self, t: f64) -> (usize, Vec<f64>) {
        let len = self.times.len();
        // bracket index: largest k with times[k] <= t (clamped)
        let bracket = match self.times.partition_point(|&tk| tk <= t) {
            0 => 0,
            k => (k - 1).min(len - 2),
        };
        let width = len.min(4);
        let start = bracket.saturating_sub(1).min(len - width);
        let nodes = &self.times[start..start + width];
        let mut weights = vec![0.0; width];
        for (m, slot) in weights.iter_mut().enumerate() {
            let mut num = 1.0;
            let mut den = 1.0;
            for l in 0..width {
                if l != m {
                    num *= t - nodes[l];
                    den *= nodes[m] - nodes[l];
                }
            }
            *slot = num / den;
        }
        (start, weights)
    }
}

impl TimeField for SampledTimeField {
    fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    fn components(&self) -> usize {
        self.fields[0].components()
    }

    fn time_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let (start, weights) = self.time_weights(t);
        let comps = out.len();
        let mut tmp = [0.0f64; 3];
        out.fill(0.0);
        for (m, w) in weights.iter().enumerate() {
            interp::sample(&self.fields[start + m], x, &mut tmp[..comps]);
            for c in 0..comps {
                out[c] += w * tmp[c];
            }
        }
    }

    fn at_time(&self, t: f64) -> Result<Field> {
        let (start, weights) = self.time_weights(t);
        let terms: Vec<(f64, &Field)> = weights
            .iter()
            .enumerate()
            .map(|(m, &w)| (w, &self.fields[start + m]))
            .collect();
        Field::linear_combination(&terms)
    }

    fn max_abs(&self) -> f64 {
        self.fields.iter().map(Field::max_abs).fold(0.0, f64::max)
    }

    fn solenoidal_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for f in &self.fields {
            worst = worst.max(f.relative_divergence()?);
        }
        Ok(worst)
    }
}

const SOLENOIDAL_TOL: f64 = 1e-10;

fn ensure_solenoidal_velocity(v: &dyn TimeField) -> Result<()> {
    if v.components() != v.grid().dim() {
        return Err(Error::InvalidParameter(format!(
            "velocity needs {} components, got {}",
            v.grid().dim(),
            v.components()
        )));
    }
    let defect = v.solenoidal_defect()?;
    if defect > SOLENOIDAL_TOL {
        return Err(Error::InvalidParameter(format!(
            "velocity must be divergence-free: relative divergence {defect:.3e}"
        )));
    }
    Ok(())
}

/// Accuracy bound for the trajectory step: `dt ≤ h / (4 max|v|)`.
fn ensure_step_bound(grid: &Grid, dt: f64, vmax: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::TimeStep(format!("step must be positive, got {dt}")));
    }
    if vmax > 0.0 {
        let bound = grid.spacing() / (4.0 * vmax);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::TimeStep(format!(
                "step {dt} exceeds the accuracy bound h/(4 max|v|) = {bound:.6}"
            )));
        }
    }
    Ok(())
}

fn ensure_time_range(v: &dyn TimeField, t0: f64, t1: f64) -> Result<()> {
    let (lo, hi) = v.time_range();
    let span_tol = 1e-9 * (t1 - t0).abs().max(1.0);
    if t0.min(t1) < lo - span_tol || t0.max(t1) > hi + span_tol {
        return Err(Error::InvalidParameter(format!(
            "requested interval [{}, {}] escapes the velocity's time range [{lo}, {hi}]",
            t0.min(t1),
            t0.max(t1)
        )));
    }
    Ok(())
}

/// Integrate the characteristic system from grid points at `t_from` to
/// `t_to` with `steps` equal fourth-order steps. Positions are returned
/// unwrapped (continuous trajectories).
fn integrate_positions(
    v: &dyn TimeField,
    t_from: f64,
    t_to: f64,
    steps: usize,
) -> Result<Vec<[f64; 3]>> {
    let grid = v.grid();
    let n = grid.dim();
    let points = grid.points();
    let coords = grid.coords().to_vec();
    let dt = (t_to - t_from) / steps as f64;

    let mut states: Vec<[f64; 3]> = (0..grid.size())
        .map(|flat| {
            let mut x = [0.0; 3];
            let mut rem = flat;
            for ax in (0..n).rev() {
                x[ax] = coords[rem % points];
                rem /= points;
            }
            x
        })
        .collect();

    states.par_iter_mut().for_each(|x| {
        let mut k1 = [0.0f64; 3];
        let mut k2 = [0.0f64; 3];
        let mut k3 = [0.0f64; 3];
        let mut k4 = [0.0f64; 3];
        let mut stage = [0.0f64; 3];
        for step in 0..steps {
            let t = t_from + dt * step as f64;
            v.eval(&x[..n], t, &mut k1[..n]);
            for ax in 0..n {
                stage[ax] = x[ax] + 0.5 * dt * k1[ax];
            }
            v.eval(&stage[..n], t + 0.5 * dt, &mut k2[..n]);
            for ax in 0..n {
                stage[ax] = x[ax] + 0.5 * dt * k2[ax];
            }
            v.eval(&stage[..n], t + 0.5 * dt, &mut k3[..n]);
            for ax in 0..n {
                stage[ax] = x[ax] + dt * k3[ax];
            }
            v.eval(&stage[..n], t + dt, &mut k4[..n]);
            for ax in 0..n {
                x[ax] += dt / 6.0 * (k1[ax] + 2.0 * k2[ax] + 2.0 * k3[ax] + k4[ax]);
            }
        }
    });

    if states
        .iter()
        .any(|x| x[..n].iter().any(|c| !c.is_finite()))
    {
        return Err(Error::NonFinite(
            "trajectory integration produced a non-finite position".into(),
        ));
    }
    Ok(states)
}

fn states_to_shift(grid: &Grid, states: &[[f64; 3]]) -> Result<Field> {
    let n = grid.dim();
    let points = grid.points();
    let coords = grid.coords().to_vec();
    let mut comps = Vec::with_capacity(n);
    for ax in 0..n {
        let values: Vec<f64> = states
            .iter()
            .enumerate()
            .map(|(flat, x)| {
                let mut rem = flat;
                for _ in ax + 1..n {
                    rem /= points;
                }
                x[ax] - coords[rem % points]
            })
            .collect();
        comps.push(
            ndarray::ArrayD::from_shape_vec(grid.shape().as_slice(), values)
                .expect("shape matches grid"),
        );
    }
    Field::vector(grid.clone(), comps)
}

/// Characteristic map of a velocity over `[t_start, t_end]`: forward
/// positions `X(y)` (where the particle at `y` ends up) and backward
/// positions `X⁻¹(x)` (where the particle now at `x` started), stored as
/// periodic displacement fields.
pub struct FlowMap {
    time_start: f64,
    time_end: f64,
    forward_shift: Field,
    backward_shift: Field,
    displacement: f64,
}

impl FlowMap {
    /// The identity map (the flow of a zero velocity).
    pub fn identity(grid: &Grid, t: f64) -> Result<FlowMap> {
        let zero = Field::zeros(grid.clone(), grid.dim())?;
        Ok(FlowMap {
            time_start: t,
            time_end: t,
            forward_shift: zero.clone(),
            backward_shift: zero,
            displacement: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.forward_shift.grid()
    }

    /// Elapsed time `t_end − t_start`.
    pub fn time(&self) -> f64 {
        self.time_end - self.time_start
    }

    /// Largest pointwise excursion `max |X^{±1}(y) − y|`.
    pub fn displacement(&self) -> f64 {
        self.displacement
    }

    pub fn forward_shift(&self) -> &Field {
        &self.forward_shift
    }

    pub fn backward_shift(&self) -> &Field {
        &self.backward_shift
    }

    /// Forward position `X(y)` of the grid point with flat index `flat`.
    pub fn position(&self, flat: usize, out: &mut [f64]) {
        self.position_from(&self.forward_shift, flat, out);
    }

    /// Backward position `X⁻¹(x)` of the grid point with flat index
    /// `flat`.
    pub fn inverse_position(&self, flat: usize, out: &mut [f64]) {
        self.position_from(&self.backward_shift, flat, out);
    }

    fn position_from(&self, shift: &Field, flat: usize, out: &mut [f64]) {
        let grid = self.grid();
        let n = grid.dim();
        let points = grid.points();
        let coords = grid.coords();
        let mut rem = flat;
        for ax in (0..n).rev() {
            out[ax] = coords[rem % points] + shift.component_slice(ax)[flat];
            rem /= points;
        }
    }

    fn compose_with(&self, f: &Field, shift: &Field) -> Result<Field> {
        self.grid().ensure_same(f.grid(), "flow composition")?;
        let grid = self.grid();
        let n = grid.dim();
        let comps = f.components();
        let size = grid.size();
        let mut interleaved = vec![0.0f64; size * comps];
        interleaved
            .par_chunks_mut(comps)
            .enumerate()
            .for_each(|(flat, out)| {
                let mut x = [0.0f64; 3];
                self.position_from(shift, flat, &mut x[..n]);
                interp::sample(f, &x[..n], out);
            });
        let mut arrays = Vec::with_capacity(comps);
        for c in 0..comps {
            let values: Vec<f64> = (0..size).map(|flat| interleaved[flat * comps + c]).collect();
            arrays.push(
                ndarray::ArrayD::from_shape_vec(grid.shape().as_slice(), values)
                    .expect("shape matches grid"),
            );
        }
        if comps == 1 {
            Field::scalar(grid.clone(), arrays.pop().expect("one component"))
        } else {
            Field::vector(grid.clone(), arrays)
        }
    }

    /// Pull a quantity back along the flow: `a₀ ∘ X⁻¹`, the transport
    /// solution at `t_end` of initial data `a₀`.
    pub fn transport(&self, a0: &Field) -> Result<Field> {
        self.compose_with(a0, &self.backward_shift)
    }

    /// Compose with the forward map: `u ∘ X`.
    pub fn compose_forward(&self, u: &Field) -> Result<Field> {
        self.compose_with(u, &self.forward_shift)
    }

    /// Largest error of `X⁻¹(X(y)) − y` over grid points: how far the two
    /// stored maps are from being mutually inverse (limited by trajectory
    /// and interpolation accuracy).
    pub fn composition_defect(&self) -> f64 {
        let grid = self.grid();
        let n = grid.dim();
        let size = grid.size();
        (0..size)
            .into_par_iter()
            .map(|flat| {
                let mut x = [0.0f64; 3];
                let mut back = [0.0f64; 3];
                self.position_from(&self.forward_shift, flat, &mut x[..n]);
                interp::sample(&self.backward_shift, &x[..n], &mut back[..n]);
                let mut y = [0.0f64; 3];
                let points = grid.points();
                let coords = grid.coords();
                let mut rem = flat;
                let mut err2 = 0.0;
                for ax in (0..n).rev() {
                    y[ax] = coords[rem % points];
                    rem /= points;
                }
                for ax in 0..n {
                    let d = x[ax] + back[ax] - y[ax];
                    err2 += d * d;
                }
                err2.sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Largest deviation of the local Jacobian determinant of the forward
    /// map from 1, estimated with fourth-order centered differences of the
    /// displacement field.
    pub fn volume_defect(&self) -> f64 {
        let grid = self.grid();
        let n = grid.dim();
        let points = grid.points() as i64;
        let h = grid.spacing();
        let size = grid.size();
        let shift = &self.forward_shift;

        let stride = |ax: usize| points.pow((n - 1 - ax) as u32);

        (0..size)
            .into_par_iter()
            .map(|flat| {
                // indices of the point along each axis
                let mut idx = [0i64; 3];
                let mut rem = flat as i64;
                for ax in (0..n).rev() {
                    idx[ax] = rem % points;
                    rem /= points;
                }
                let neighbor = |ax: usize, offset: i64| -> usize {
                    let mut pos = 0i64;
                    for a in 0..n {
                        let i = if a == ax {
                            (idx[a] + offset).rem_euclid(points)
                        } else {
                            idx[a]
                        };
                        pos += i * stride(a);
                    }
                    pos as usize
                };
                let mut jac = [[0.0f64; 3]; 3];
                for (i, row) in jac.iter_mut().enumerate().take(n) {
                    let values = shift.component_slice(i);
                    for (ax, entry) in row.iter_mut().enumerate().take(n) {
                        let d = (-values[neighbor(ax, 2)] + 8.0 * values[neighbor(ax, 1)]
                            - 8.0 * values[neighbor(ax, -1)]
                            + values[neighbor(ax, -2)])
                            / (12.0 * h);
                        *entry = d + if i == ax { 1.0 } else { 0.0 };
                    }
                }
                let det = match n {
                    2 => jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
                    3 => {
                        jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
                    }
                    _ => unreachable!(),
                };
                (det - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Integrate the characteristic map of `v` over `[t0, t1]` (`t1 > t0`),
/// with at most `dt` per fourth-order step. The backward map comes from
/// integrating the same velocity with time reversed.
pub fn integrate_flow(v: &dyn TimeField, t0: f64, t1: f64, dt: f64) -> Result<FlowMap> {
    let grid = v.grid().clone();
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "flow interval must have t1 > t0, got [{t0}, {t1}]"
        )));
    }
    ensure_time_range(v, t0, t1)?;
    ensure_solenoidal_velocity(v)?;
    ensure_step_bound(&grid, dt, v.max_abs())?;
    let steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;

    let forward = integrate_positions(v, t0, t1, steps)?;
    let backward = integrate_positions(v, t1, t0, steps)?;
    let forward_shift = states_to_shift(&grid, &forward)?;
    let backward_shift = states_to_shift(&grid, &backward)?;
    let displacement = forward_shift.max_magnitude().max(backward_shift.max_magnitude());
    Ok(FlowMap {
        time_start: t0,
        time_end: t1,
        forward_shift,
        backward_shift,
        displacement,
    })
}

/// Ceiling for the norm distortion of composition with a
/// volume-preserving map of displacement `gamma`: a shift by `gamma` can
/// move mass across `max(1, ⌈log₂(1+gamma)⌉)` rings, each ring crossing
/// costing at most `2^{|α|}` in weight and `2^{n/p}` in measure, plus two
/// safety bits. An engineering bound — the underlying norm-equivalence
/// constant is not quantified analytically.
pub fn composition_ceiling(params: &NormParams, n: usize, gamma: f64) -> f64 {
    let octaves = (1.0 + gamma.max(0.0)).log2().ceil().max(1.0);
    ((params.alpha.abs() + n as f64 / params.p) * octaves + 2.0).exp2()
}

/// Two-sided norm-equivalence check for composition with a flow map:
/// `‖u∘X‖_K` against `‖u‖_K`. The report's `lhs` is the worse of the two
/// ratios, `rhs = 1`.
pub fn check_composition_norm(
    u: &Field,
    map: &FlowMap,
    params: &NormParams,
    rings: &RingPartition,
) -> Result<EstimateReport> {
    map.grid().ensure_same(u.grid(), "composition estimate")?;
    let volume = map.volume_defect();
    if volume > 1e-4 {
        return Err(Error::InvalidParameter(format!(
            "flow map is not volume-preserving enough for the norm equivalence: |det J − 1| = {volume:.3e}"
        )));
    }
    let base = herz_norm(u, rings, params)?;
    if base == 0.0 {
        return Err(Error::InvalidParameter(
            "composition estimate needs a nonzero field".into(),
        ));
    }
    let composed = map.compose_forward(u)?;
    let ratio = herz_norm(&composed, rings, params)? / base;
    let lhs = ratio.max(1.0 / ratio);
    let gamma = map.displacement();
    let ceiling = composition_ceiling(params, u.grid().dim(), gamma);
    Ok(EstimateReport::new(
        lhs,
        1.0,
        ceiling,
        format!(
            "composition gamma={gamma:.4} volume_defect={volume:.2e} ratio={ratio:.6} alpha={} p={} q={}",
            params.alpha, params.p, params.q
        ),
    ))
}

/// Solve `∂_t a + u·∇a = 0, a(0) = a₀` on `[0, t_final]` by backward
/// characteristics, storing `outputs` equally spaced slices (including
/// both endpoints). Each output time is reached by one independent
/// backward integration, so slices carry no accumulated resampling error.
pub fn solve_transport(
    a0: &Field,
    u: &dyn TimeField,
    t_final: f64,
    dt: f64,
    outputs: usize,
) -> Result<SampledTimeField> {
    let grid = u.grid().clone();
    grid.ensure_same(a0.grid(), "transport")?;
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transport horizon must be positive, got {t_final}"
        )));
    }
    if outputs < 2 {
        return Err(Error::InvalidParameter(
            "transport needs at least two output slices".into(),
        ));
    }
    ensure_time_range(u, 0.0, t_final)?;
    ensure_solenoidal_velocity(u)?;
    ensure_step_bound(&grid, dt, u.max_abs())?;

    let mut times = Vec::with_capacity(outputs);
    let mut fields = Vec::with_capacity(outputs);
    times.push(0.0);
    fields.push(a0.clone());
    for k in 1..outputs {
        let t_k = t_final * k as f64 / (outputs - 1) as f64;
        let steps = (t_k / dt).ceil().max(1.0) as usize;
        let backward = integrate_positions(u, t_k, 0.0, steps)?;
        let shift = states_to_shift(&grid, &backward)?;
        let map = FlowMap {
            time_start: 0.0,
            time_end: t_k,
            forward_shift: Field::zeros(grid.clone(), grid.dim())?,
            backward_shift: shift,
            displacement: 0.0,
        };
        times.push(t_k);
        fields.push(map.transport(a0)?);
    }
    SampledTimeField::new(times, fields)
}

/// Verify the Grönwall-form transport bound on a solved trace: at every
/// stored time, `‖a(t)‖ ≤ C (‖a₀‖ + ∫₀ᵗ ‖a(τ)‖ ‖u(τ)‖ dτ)` with the
/// norms of the supplied parameters. The report's `lhs` is the largest
/// observed constant `C`, `rhs = 1`; the witness records the matching
/// exponential-envelope constant and whether the bound grew monotonically.
pub fn check_transport_estimate(
    a: &SampledTimeField,
    u: &dyn TimeField,
    params: &NormParams,
    frame: &crate::frame::Frame,
    ceiling: f64,
) -> Result<EstimateReport> {
    params.admissible_for_scheme(a.grid().dim())?;
    frame.grid().ensure_same(a.grid(), "transport estimate")?;
    let mode = crate::dyadic::Mode::NonHomogeneous;
    let times = a.times().to_vec();
    let mut a_norms = Vec::with_capacity(times.len());
    let mut u_norms = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        a_norms.push(crate::besov::besov_herz_norm(a.slice(k), frame, params, mode)?.0);
        u_norms.push(crate::besov::besov_herz_norm(&u.at_time(t)?, frame, params, mode)?.0);
    }
    let a0 = a_norms[0];
    if a0 == 0.0 {
        return Err(Error::InvalidParameter(
            "transport estimate needs nonzero initial data".into(),
        ));
    }

    // cumulative trapezoid of ‖a‖‖u‖
    let mut integral = vec![0.0; times.len()];
    for k in 1..times.len() {
        let step = times[k] - times[k - 1];
        integral[k] = integral[k - 1]
            + 0.5 * step * (a_norms[k] * u_norms[k] + a_norms[k - 1] * u_norms[k - 1]);
    }
    let mut fitted = 0.0f64;
    let mut monotone = true;
    let mut prev_bound = 0.0;
    for k in 0..times.len() {
        let bound = a0 + integral[k];
        fitted = fitted.max(a_norms[k] / bound);
        if bound < prev_bound - 1e-12 {
            monotone = false;
        }
        prev_bound = bound;
    }

    // matching constant for the closed exponential envelope
    // ‖a(t)‖ ≤ C exp(C t sup‖u‖) ‖a₀‖, solved per time by bisection
    let u_sup = u_norms.iter().cloned().fold(0.0, f64::max);
    let mut exp_constant = 0.0f64;
    for k in 0..times.len() {
        let target = a_norms[k] / a0;
        let t = times[k];
        let mut lo = 0.0;
        let mut hi = target.max(1.0);
        while hi * (hi * t * u_sup).exp() < target {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid * (mid * t * u_sup).exp() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        exp_constant = exp_constant.max(hi);
    }

    Ok(EstimateReport::new(
        fitted,
        1.0,
        ceiling,
        format!(
            "transport-envelope T={:.4} exp_constant={exp_constant:.4} bound_monotone={monotone} alpha={} p={} q={} r={} s={}",
            times.last().expect("nonempty"),
            params.alpha,
            params.p,
            params.q,
            params.r,
            params.s
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::smooth_step;
    use crate::frame::Frame;
    use crate::sampling::{smooth_scalar, solenoidal, SmoothSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::PI;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    /// Rotation about the box point `c`, rigid for `|x−c| ≤ 1.5`, zero for
    /// `|x−c| ≥ 3.5`; divergence-free by construction (radial rate).
    fn rotation_velocity(grid: &Grid, c: [f64; 2]) -> Field {
        Field::vector_from_fn(grid.clone(), move |x, comp| {
            let dx = x[0] - c[0];
            let dy = x[1] - c[1];
            let r = (dx * dx + dy * dy).sqrt();
            let rate = 1.0 - smooth_step((r - 1.5) / 2.0);
            if comp == 0 {
                -rate * dy
            } else {
                rate * dx
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_velocity_gives_identity_flow_and_transport() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let v = SteadyField::new(Field::zeros(grid.clone(), 2).unwrap());
        let map = integrate_flow(&v, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(map.displacement(), 0.0);
        assert_eq!(map.composition_defect(), 0.0);
        let a0 = smooth_scalar(&grid, &SmoothSpec::for_smoothness(2.0, 2, 1.0), &mut rng(3))
            .unwrap();
        let a = solve_transport(&a0, &v, 1.0, 0.25, 3).unwrap();
        for k in 0..a.len() {
            assert!(a.slice(k).relative_l2_gap(&a0).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn constant_velocity_translates_initial_data() {
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let kappa = 2.0 * PI / grid.length();
        let a0 = Field::scalar_from_fn(grid.clone(), |x| {
            (kappa * x[0]).sin() * (2.0 * kappa * x[1]).cos()
        })
        .unwrap();
        let c = [0.5, -0.25];
        let v = SteadyField::new(
            Field::vector_from_fn(grid.clone(), move |_, comp| c[comp]).unwrap(),
        );
        let t = 1.0;
        let a = solve_transport(&a0, &v, t, 0.05, 3).unwrap();
        let expected = Field::scalar_from_fn(grid, move |x| {
            (kappa * (x[0] - c[0] * t)).sin() * (2.0 * kappa * (x[1] - c[1] * t)).cos()
        })
        .unwrap();
        let gap = a.slice(2).sub(&expected).unwrap().max_abs();
        assert!(gap <= 1e-8, "translation error {gap:.3e}");
    }

    #[test]
    fn rotation_flow_matches_the_closed_form_in_the_rigid_core() {
        let grid = Grid::new(2, 256, 16.0).unwrap();
        let center = [8.0, 8.0];
        let v = SteadyField::new(rotation_velocity(&grid, center));
        let t = PI / 2.0;
        let map = integrate_flow(&v, 0.0, t, 0.005).unwrap();

        // grid points inside the rigid core rotate by exactly 90°
        let mut checked = 0;
        let mut pos = [0.0f64; 2];
        for flat in 0..grid.size() {
            let y = [grid.coords()[flat / 256], grid.coords()[flat % 256]];
            let dx = y[0] - center[0];
            let dy = y[1] - center[1];
            if (dx * dx + dy * dy).sqrt() > 1.2 {
                continue;
            }
            checked += 1;
            map.position(flat, &mut pos);
            let expected = [center[0] - dy, center[1] + dx];
            let err =
                ((pos[0] - expected[0]).powi(2) + (pos[1] - expected[1]).powi(2)).sqrt();
            assert!(err <= 1e-6, "rotation error {err:.3e} at {y:?}");
        }
        assert!(checked > 100, "rigid core unexpectedly small: {checked}");

        // the two stored maps invert each other and preserve volume
        assert!(map.composition_defect() <= 1e-6);
        assert!(map.volume_defect() <= 1e-3);

        // displacement bounded by the integrated sup norm (steady field)
        assert!(map.displacement() <= t * v.max_abs() + 1e-6);
    }

    #[test]
    fn transported_scalar_returns_after_a_half_turn_pair() {
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let center = [8.0, 8.0];
        let v = SteadyField::new(rotation_velocity(&grid, center));
        // initial bump inside the rigid core, radial about the same center
        let a0 = Field::scalar_from_fn(grid.clone(), move |x| {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let r = (dx * dx + dy * dy).sqrt();
            1.0 - smooth_step((r - 0.4) / 0.7)
        })
        .unwrap();
        let a = solve_transport(&a0, &v, PI, 0.01, 3).unwrap();
        // radial data about the rotation center is a fixed point
        for k in 1..a.len() {
            let gap = a.slice(k).sub(&a0).unwrap().max_abs();
            assert!(gap <= 1e-5, "slice {k} deviates by {gap:.3e}");
        }
        // min/max principle up to interpolation overshoot
        let lo = a0.lp_grid(f64::INFINITY);
        for k in 0..a.len() {
            let s = a.slice(k);
            assert!(s.lp_grid(f64::INFINITY) <= lo + 1e-3);
        }
        // grid L² conservation (volume-preserving flow)
        let base = a0.l2_grid();
        for k in 0..a.len() {
            assert!((a.slice(k).l2_grid() - base).abs() <= 1e-5 * base);
        }
    }

    #[test]
    fn composition_norm_is_exact_for_identity_and_symmetric_data() {
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let rings = RingPartition::new(&grid).unwrap();
        let params = NormParams::ring(0.5, 2.0, 1.0).unwrap();
        let u = smooth_scalar(&grid, &SmoothSpec::for_smoothness(2.0, 2, 1.0), &mut rng(5))
            .unwrap();

        let identity = FlowMap::identity(&grid, 0.0).unwrap();
        let report = check_composition_norm(&u, &identity, &params, &rings).unwrap();
        assert_eq!(report.lhs, 1.0);
        assert!(report.pass);

        // radial data about the center of a rigid rotation is invariant
        let center = [8.0, 8.0];
        let v = SteadyField::new(rotation_velocity(&grid, center));
        let map = integrate_flow(&v, 0.0, 0.8, 0.005).unwrap();
        let radial = Field::scalar_from_fn(grid, move |x| {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let r = (dx * dx + dy * dy).sqrt();
            1.0 - smooth_step((r - 0.5) / 0.8)
        })
        .unwrap();
        let report = check_composition_norm(&radial, &map, &params, &rings).unwrap();
        assert!((report.lhs - 1.0).abs() <= 1e-6, "ratio {:.8}", report.lhs);
    }

    #[test]
    fn random_flow_stays_within_the_ring_shift_ceiling() {
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let rings = RingPartition::new(&grid).unwrap();
        let params = NormParams::ring(0.5, 2.0, 1.0).unwrap();
        let spec = SmoothSpec::for_smoothness(3.0, 2, 1.0).with_max_wavenumber(4);
        let v = SteadyField::new(solenoidal(&grid, &spec, &mut rng(17)).unwrap());
        let map = integrate_flow(&v, 0.0, 0.5, 0.03).unwrap();
        assert!(map.displacement() <= 0.5 * v.max_abs() + 1e-6);
        assert!(map.volume_defect() <= 1e-4);
        let u = smooth_scalar(&grid, &SmoothSpec::for_smoothness(2.0, 2, 1.0), &mut rng(18))
            .unwrap();
        let report = check_composition_norm(&u, &map, &params, &rings).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn transport_estimate_fits_a_unit_constant_for_zero_velocity() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let frame = Frame::new(&grid).unwrap();
        let params = NormParams::new(0.5, 2.0, 1.0, 1.0, 2.0).unwrap();
        let spec = SmoothSpec::for_smoothness(2.0, 2, 1.0).with_max_wavenumber(10);
        let a0 = smooth_scalar(&grid, &spec, &mut rng(23)).unwrap();
        let v = SteadyField::new(Field::zeros(grid, 2).unwrap());
        let a = solve_transport(&a0, &v, 1.0, 0.25, 5).unwrap();
        let report = check_transport_estimate(&a, &v, &params, &frame, 2.0).unwrap();
        assert!(report.pass);
        assert!((report.fitted_constant - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn transport_estimate_covers_a_rotating_trace() {
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let frame = Frame::new(&grid).unwrap();
        let params = NormParams::new(0.5, 2.0, 1.0, 1.0, 2.0).unwrap();
        let center = [8.0, 8.0];
        let v = SteadyField::new(rotation_velocity(&grid, center));
        let spec = SmoothSpec::for_smoothness(2.0, 2, 1.0).with_max_wavenumber(8);
        let a0 = smooth_scalar(&grid, &spec, &mut rng(29)).unwrap();
        let a = solve_transport(&a0, &v, 1.0, 0.01, 5).unwrap();
        let report = check_transport_estimate(&a, &v, &params, &frame, 2.0).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.witness.contains("bound_monotone=true"));
    }

    #[test]
    fn guards_reject_bad_steps_and_compressible_velocities() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let kappa = 2.0 * PI / grid.length();
        let sol = Field::vector_from_fn(grid.clone(), move |x, c| {
            if c == 0 {
                -(kappa * x[1]).sin()
            } else {
                (kappa * x[0]).sin()
            }
        })
        .unwrap();
        let v = SteadyField::new(sol);
        // step far beyond the accuracy bound
        assert!(matches!(
            integrate_flow(&v, 0.0, 1.0, 1.0),
            Err(Error::TimeStep(_))
        ));
        // compressible velocity
        let bad = SteadyField::new(
            Field::vector_from_fn(grid, move |x, _| (kappa * x[0]).sin()).unwrap(),
        );
        assert!(matches!(
            integrate_flow(&bad, 0.0, 1.0, 0.01),
            Err(Error::InvalidParameter(_))
        ));
    }
}
