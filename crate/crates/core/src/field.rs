//! Real fields on a periodic grid with lazily cached Fourier coefficients.
//!
//! A [`Field`] owns one value array per component (1 for scalars, `n` for
//! vectors), stored row-major. Fields are immutable: every operation
//! produces a new field, so sharing across threads is safe. The spectral
//! side is computed at most once per field through a `OnceLock`, and
//! spectral constructors seed that cache so multiplier pipelines do not
//! re-transform.
//!
//! Spectral conventions: coefficients are Fourier-series coefficients
//! (`u(x) = Σ_k û(k) e^{i 2πk·x/L}` with the forward DFT normalized by
//! `1/N^n`). The grid-weighted L² norm `(h^n Σ|u|²)^{1/2}` therefore equals
//! the coefficient norm `(L^n Σ|û|²)^{1/2}`. Differentiation multiplies by
//! `iξ` and zeroes the Nyquist index, whose odd-derivative phase is not
//! representable on a real grid.

use ndarray::ArrayD;
use num_complex::Complex64;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

#[derive(Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<ArrayD<f64>>,
    spectral: OnceLock<Vec<ArrayD<Complex64>>>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        Field {
            grid: self.grid.clone(),
            values: self.values.clone(),
            spectral: self.spectral.clone(),
        }
    }
}

fn ensure_finite(values: &[ArrayD<f64>], what: &str) -> Result<()> {
    for comp in values {
        if !comp.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
    }
    Ok(())
}

impl Field {
    fn validated(grid: Grid, values: Vec<ArrayD<f64>>, what: &str) -> Result<Field> {
        let c = values.len();
        if c != 1 && c != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "{what}: component count must be 1 or {}, got {c}",
                grid.dim()
            )));
        }
        for comp in &values {
            if comp.shape() != grid.shape().as_slice() {
                return Err(Error::GridMismatch(format!(
                    "{what}: component shape {:?} does not match grid {:?}",
                    comp.shape(),
                    grid.shape()
                )));
            }
        }
        ensure_finite(&values, what)?;
        Ok(Field {
            grid,
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn scalar(grid: Grid, values: ArrayD<f64>) -> Result<Field> {
        Field::validated(grid, vec![values], "scalar field")
    }

    pub fn vector(grid: Grid, values: Vec<ArrayD<f64>>) -> Result<Field> {
        if values.len() != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                values.len()
            )));
        }
        Field::validated(grid, values, "vector field")
    }

    pub fn zeros(grid: Grid, components: usize) -> Result<Field> {
        let shape = grid.shape();
        let values = (0..components)
            .map(|_| ArrayD::zeros(shape.as_slice()))
            .collect();
        Field::validated(grid, values, "zero field")
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Field> {
        let shape = grid.shape();
        Field::validated(
            grid,
            vec![ArrayD::from_elem(shape.as_slice(), value)],
            "constant field",
        )
    }

    /// Scalar field from a function of the physical coordinates.
    pub fn scalar_from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Field> {
        let shape = grid.shape();
        let coords = grid.coords().to_vec();
        let n = grid.dim();
        let values = ArrayD::from_shape_fn(shape.as_slice(), |idx| {
            let mut x = [0.0f64; 3];
            for ax in 0..n {
                x[ax] = coords[idx[ax]];
            }
            f(&x[..n])
        });
        Field::scalar(grid, values)
    }

    /// Vector field from a function of the physical coordinates.
    pub fn vector_from_fn(grid: Grid, f: impl Fn(&[f64], usize) -> f64 + Sync) -> Result<Field> {
        let shape = grid.shape();
        let coords = grid.coords().to_vec();
        let n = grid.dim();
        let values = (0..n)
            .map(|c| {
                ArrayD::from_shape_fn(shape.as_slice(), |idx| {
                    let mut x = [0.0f64; 3];
                    for ax in 0..n {
                        x[ax] = coords[idx[ax]];
                    }
                    f(&x[..n], c)
                })
            })
            .collect();
        Field::vector(grid, values)
    }

    /// Build a field from Fourier coefficients (one array per component).
    /// Coefficients are assumed conjugate-symmetric; the inverse transform's
    /// real part is kept and the provided coefficients seed the cache.
    pub fn from_spectral(grid: Grid, coeffs: Vec<ArrayD<Complex64>>) -> Result<Field> {
        let c = coeffs.len();
        if c != 1 && c != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "spectral field: component count must be 1 or {}, got {c}",
                grid.dim()
            )));
        }
        for comp in &coeffs {
            if comp.shape() != grid.shape().as_slice() {
                return Err(Error::GridMismatch(
                    "spectral field: coefficient shape does not match grid".into(),
                ));
            }
            if !comp.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite("spectral coefficients".into()));
            }
        }
        let values: Vec<ArrayD<f64>> = coeffs.iter().map(fft::inverse_to_real).collect();
        let field = Field::validated(grid, values, "spectral field")?;
        let _ = field.spectral.set(coeffs);
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.values.len() == 1
    }

    pub fn component(&self, c: usize) -> &ArrayD<f64> {
        &self.values[c]
    }

    pub fn component_slice(&self, c: usize) -> &[f64] {
        self.values[c].as_slice().expect("row-major field storage")
    }

    /// Fourier coefficients per component, computed once and cached.
    pub fn spectral(&self) -> &[ArrayD<Complex64>] {
        self.spectral
            .get_or_init(|| self.values.iter().map(fft::forward_real).collect())
    }

    // ---- pointwise algebra ----------------------------------------------

    fn zip_components(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid, "field algebra")?;
        if self.components() != other.components() {
            return Err(Error::InvalidParameter(format!(
                "component mismatch: {} vs {}",
                self.components(),
                other.components()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let mut out = a.clone();
                out.zip_mut_with(b, |x, y| *x = op(*x, *y));
                out
            })
            .collect();
        Field::validated(self.grid.clone(), values, "field algebra")
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_components(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_components(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Result<Field> {
        let values = self.values.iter().map(|a| a.mapv(|v| v * factor)).collect();
        Field::validated(self.grid.clone(), values, "scaled field")
    }

    pub fn add_scalar(&self, offset: f64) -> Result<Field> {
        let values = self.values.iter().map(|a| a.mapv(|v| v + offset)).collect();
        Field::validated(self.grid.clone(), values, "shifted field")
    }

    /// Pointwise product with a scalar field (applied to every component).
    pub fn mul_scalar_field(&self, scalar: &Field) -> Result<Field> {
        self.grid.ensure_same(&scalar.grid, "pointwise product")?;
        if !scalar.is_scalar() {
            return Err(Error::InvalidParameter(
                "pointwise product: multiplier must be a scalar field".into(),
            ));
        }
        let s = &scalar.values[0];
        let values = self
            .values
            .iter()
            .map(|a| {
                let mut out = a.clone();
                out.zip_mut_with(s, |x, y| *x *= *y);
                out
            })
            .collect();
        Field::validated(self.grid.clone(), values, "pointwise product")
    }

    /// Pointwise dot product of two fields with equal component counts.
    pub fn dot(&self, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid, "dot product")?;
        if self.components() != other.components() {
            return Err(Error::InvalidParameter(
                "dot product: component counts differ".into(),
            ));
        }
        let shape = self.grid.shape();
        let mut out = ArrayD::<f64>::zeros(shape.as_slice());
        for (a, b) in self.values.iter().zip(&other.values) {
            let mut term = a.clone();
            term.zip_mut_with(b, |x, y| *x *= *y);
            out.zip_mut_with(&term, |x, y| *x += *y);
        }
        Field::scalar(self.grid.clone(), out)
    }

    /// Linear combination `Σ c_i f_i` of same-shape fields.
    pub fn linear_combination(terms: &[(f64, &Field)]) -> Result<Field> {
        let (first_coeff, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        let mut acc = first.scale(*first_coeff)?;
        for (coeff, field) in &terms[1..] {
            first.grid.ensure_same(&field.grid, "linear combination")?;
            if field.components() != first.components() {
                return Err(Error::InvalidParameter(
                    "linear combination: component counts differ".into(),
                ));
            }
            for (dst, src) in acc.values.iter_mut().zip(&field.values) {
                dst.zip_mut_with(src, |x, y| *x += coeff * y);
            }
        }
        acc.spectral = OnceLock::new();
        ensure_finite(&acc.values, "linear combination")?;
        Ok(acc)
    }

    pub fn extract_component(&self, c: usize) -> Result<Field> {
        Field::scalar(self.grid.clone(), self.values[c].clone())
    }

    pub fn from_components(grid: Grid, comps: Vec<Field>) -> Result<Field> {
        let mut values = Vec::new();
        for f in &comps {
            grid.ensure_same(&f.grid, "component assembly")?;
            if !f.is_scalar() {
                return Err(Error::InvalidParameter(
                    "component assembly expects scalar fields".into(),
                ));
            }
            values.push(f.values[0].clone());
        }
        Field::validated(grid, values, "component assembly")
    }

    // ---- spectral operators ----------------------------------------------

    /// Apply a scalar multiplier `m(ξ)` (a function of the physical
    /// frequency vector) to every component.
    pub fn apply_multiplier(&self, m: impl Fn(&[f64]) -> f64 + Sync) -> Result<Field> {
        let grid = &self.grid;
        let n = grid.dim();
        let points = grid.points();
        let table: Vec<f64> = (0..points).map(|i| grid.xi(i)).collect();
        let coeffs = self
            .spectral()
            .iter()
            .map(|c| {
                let flat = c.as_slice().expect("row-major spectral storage");
                let mut out = c.clone();
                let out_flat = out.as_slice_mut().expect("row-major spectral storage");
                for (pos, v) in out_flat.iter_mut().enumerate() {
                    let mut xi = [0.0f64; 3];
                    let mut rem = pos;
                    for ax in (0..n).rev() {
                        xi[ax] = table[rem % points];
                        rem /= points;
                    }
                    *v = flat[pos] * m(&xi[..n]);
                }
                out
            })
            .collect();
        Field::from_spectral(grid.clone(), coeffs)
    }

    /// Apply a precomputed real multiplier array to every component.
    pub fn apply_multiplier_array(&self, m: &ArrayD<f64>) -> Result<Field> {
        if m.shape() != self.grid.shape().as_slice() {
            return Err(Error::GridMismatch(
                "multiplier array shape does not match grid".into(),
            ));
        }
        let coeffs = self
            .spectral()
            .iter()
            .map(|c| {
                let mut out = c.clone();
                out.zip_mut_with(m, |v, w| *v *= *w);
                out
            })
            .collect();
        Field::from_spectral(self.grid.clone(), coeffs)
    }

    /// Multiplier table `iξ` per storage index with the Nyquist index zeroed.
    fn derivative_factors(&self) -> Vec<Complex64> {
        let grid = &self.grid;
        let points = grid.points();
        (0..points)
            .map(|i| {
                if i == points / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.xi(i))
                }
            })
            .collect()
    }

    /// Spectral partial derivative along one axis, per component.
    pub fn derivative(&self, axis: usize) -> Result<Field> {
        let grid = &self.grid;
        if axis >= grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "derivative axis {axis} out of range for dimension {}",
                grid.dim()
            )));
        }
        let n = grid.dim();
        let points = grid.points();
        let factors = self.derivative_factors();
        let coeffs = self
            .spectral()
            .iter()
            .map(|c| {
                let mut out = c.clone();
                let flat = out.as_slice_mut().expect("row-major spectral storage");
                // Row-major stride of `axis`: product of trailing extents.
                let stride = points.pow((n - 1 - axis) as u32);
                for (pos, v) in flat.iter_mut().enumerate() {
                    let idx = (pos / stride) % points;
                    *v *= factors[idx];
                }
                out
            })
            .collect();
        Field::from_spectral(grid.clone(), coeffs)
    }

    /// Gradient of a scalar field as a vector field.
    pub fn gradient(&self) -> Result<Field> {
        if !self.is_scalar() {
            return Err(Error::InvalidParameter(
                "gradient expects a scalar field".into(),
            ));
        }
        let comps: Vec<Field> = (0..self.grid.dim())
            .map(|ax| self.derivative(ax))
            .collect::<Result<_>>()?;
        Field::from_components(self.grid.clone(), comps)
    }

    /// Divergence of a vector field as a scalar field.
    pub fn divergence(&self) -> Result<Field> {
        if self.components() != self.grid.dim() {
            return Err(Error::InvalidParameter(
                "divergence expects a vector field".into(),
            ));
        }
        let mut acc = self.extract_component(0)?.derivative(0)?;
        for ax in 1..self.grid.dim() {
            acc = acc.add(&self.extract_component(ax)?.derivative(ax)?)?;
        }
        Ok(acc)
    }

    /// Advection term `v·∇u`, applied to every component of `u`.
    pub fn advect(v: &Field, u: &Field) -> Result<Field> {
        v.grid.ensure_same(&u.grid, "advection")?;
        if v.components() != v.grid.dim() {
            return Err(Error::InvalidParameter(
                "advection velocity must be a vector field".into(),
            ));
        }
        let mut out: Option<Field> = None;
        for ax in 0..v.grid.dim() {
            let term = u.derivative(ax)?.mul_scalar_field(&v.extract_component(ax)?)?;
            out = Some(match out {
                None => term,
                Some(acc) => acc.add(&term)?,
            });
        }
        Ok(out.expect("dimension >= 2"))
    }

    // ---- reductions -------------------------------------------------------

    /// Pointwise Euclidean magnitude over components at a flat index.
    #[inline]
    pub fn magnitude_at(&self, flat: usize) -> f64 {
        let mut sum = 0.0;
        for comp in &self.values {
            let v = comp.as_slice().expect("row-major field storage")[flat];
            sum += v * v;
        }
        sum.sqrt()
    }

    /// Maximum pointwise magnitude.
    pub fn max_abs(&self) -> f64 {
        let size = self.grid.size();
        let mut best = 0.0f64;
        for flat in 0..size {
            best = best.max(self.magnitude_at(flat));
        }
        best
    }

    /// Grid-weighted Lᵖ norm of the pointwise magnitude; `p = ∞` is the max.
    pub fn lp_grid(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let w = self.grid.cell_volume();
        let mut acc = 0.0;
        for flat in 0..self.grid.size() {
            acc += self.magnitude_at(flat).powf(p) * w;
        }
        acc.powf(1.0 / p)
    }

    /// Grid-weighted L² norm `(h^n Σ |u|²)^{1/2}`.
    pub fn l2_grid(&self) -> f64 {
        let w = self.grid.cell_volume();
        let mut acc = 0.0;
        for comp in &self.values {
            acc += comp.iter().map(|v| v * v).sum::<f64>();
        }
        (acc * w).sqrt()
    }

    /// Coefficient-side L² norm `(L^n Σ |û|²)^{1/2}`; equals [`l2_grid`] by
    /// the Parseval identity.
    pub fn l2_spectral(&self) -> f64 {
        let vol = self.grid.length().powi(self.grid.dim() as i32);
        let mut acc = 0.0;
        for comp in self.spectral() {
            acc += comp.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        (acc * vol).sqrt()
    }

    /// Mean value per component.
    pub fn mean(&self, c: usize) -> f64 {
        self.values[c].iter().sum::<f64>() / self.grid.size() as f64
    }

    /// Fraction of spectral energy carried by modes with |ξ| outside
    /// `[lo, hi]`, relative to total energy. Zero-energy fields report 0.
    pub fn spectral_energy_outside(&self, lo: f64, hi: f64) -> f64 {
        let grid = &self.grid;
        let mut total = 0.0;
        let mut outside = 0.0;
        for comp in self.spectral() {
            let flat = comp.as_slice().expect("row-major spectral storage");
            for (pos, v) in flat.iter().enumerate() {
                let e = v.norm_sqr();
                total += e;
                let xi = grid.xi_norm_sq(pos).sqrt();
                if xi < lo || xi > hi {
                    outside += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    /// Relative L² distance `‖self − other‖₂ / max(‖self‖₂, ‖other‖₂)`;
    /// falls back to the absolute distance when both fields vanish.
    pub fn relative_l2_gap(&self, other: &Field) -> Result<f64> {
        let diff = self.sub(other)?.l2_grid();
        let scale = self.l2_grid().max(other.l2_grid());
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }

    /// Relative divergence size `‖div v‖₂ / max(‖∇v‖₂, tiny)`, a
    /// scale-invariant solenoidality measure (0 for the zero field).
    pub fn relative_divergence(&self) -> Result<f64> {
        let div = self.divergence()?.l2_grid();
        let mut grad_sq = 0.0;
        for c in 0..self.components() {
            for ax in 0..self.grid.dim() {
                let d = self.extract_component(c)?.derivative(ax)?.l2_grid();
                grad_sq += d * d;
            }
        }
        let scale = grad_sq.sqrt();
        if scale == 0.0 {
            Ok(0.0)
        } else {
            Ok(div / scale)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(2, 64, 16.0).unwrap()
    }

    #[test]
    fn constant_field_has_single_zero_mode() {
        let f = Field::constant(grid(), 1.0).unwrap();
        let coeffs = &f.spectral()[0];
        assert!((coeffs[[0, 0]].re - 1.0).abs() < 1e-13);
        let stray: f64 = coeffs
            .indexed_iter()
            .filter(|(idx, _)| !(idx[0] == 0 && idx[1] == 0))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(stray < 1e-13);
    }

    #[test]
    fn cosine_lands_on_the_unit_modes() {
        let g = grid();
        let l = g.length();
        let f = Field::scalar_from_fn(g, |x| (2.0 * PI * x[0] / l).cos()).unwrap();
        let coeffs = &f.spectral()[0];
        assert!((coeffs[[1, 0]].norm() - 0.5).abs() < 1e-12);
        assert!((coeffs[[63, 0]].norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parseval_holds_to_double_precision() {
        let g = grid();
        let l = g.length();
        let f = Field::scalar_from_fn(g, |x| {
            (2.0 * PI * x[0] / l).sin() * (4.0 * PI * x[1] / l).cos() + 0.3
        })
        .unwrap();
        let a = f.l2_grid();
        let b = f.l2_spectral();
        assert!((a - b).abs() <= 1e-12 * a.max(b));
    }

    #[test]
    fn spectral_derivative_matches_closed_form() {
        let g = grid();
        let l = g.length();
        let kappa = 2.0 * PI / l;
        let f = Field::scalar_from_fn(g.clone(), |x| (kappa * x[0]).sin()).unwrap();
        let expect = Field::scalar_from_fn(g, |x| kappa * (kappa * x[0]).cos()).unwrap();
        let d = f.derivative(0).unwrap();
        let err = d.sub(&expect).unwrap().max_abs();
        assert!(err <= 1e-10, "derivative error {err}");
    }

    #[test]
    fn advection_of_plane_wave_matches_closed_form() {
        let g = grid();
        let l = g.length();
        let kappa = 2.0 * PI / l;
        let v = Field::vector_from_fn(g.clone(), |x, c| {
            if c == 0 {
                (kappa * x[1]).cos()
            } else {
                0.5
            }
        })
        .unwrap();
        let u = Field::scalar_from_fn(g.clone(), |x| (kappa * x[0]).sin()).unwrap();
        let adv = Field::advect(&v, &u).unwrap();
        let expect = Field::scalar_from_fn(g, |x| {
            (kappa * x[1]).cos() * kappa * (kappa * x[0]).cos()
        })
        .unwrap();
        let err = adv.sub(&expect).unwrap().max_abs();
        assert!(err <= 1e-10, "advection error {err}");
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = grid();
        let mut values = ArrayD::<f64>::zeros(g.shape().as_slice());
        values[[3, 4]] = f64::NAN;
        assert!(matches!(
            Field::scalar(g, values),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn rejects_component_count_outside_contract() {
        let g = grid();
        let shape = g.shape();
        let mk = || ArrayD::<f64>::zeros(shape.as_slice());
        assert!(Field::validated(g.clone(), vec![mk(), mk(), mk()], "t").is_err());
        assert!(Field::vector(g, vec![mk()]).is_err());
    }
}
