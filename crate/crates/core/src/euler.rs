//! Incompressible flow machinery: solenoidal projection, the
//! variable-coefficient pressure solve, a linearized momentum solver, and
//! the outer iteration that couples transport and momentum. (Built up in
//! stages; see module items.)

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;

/// Solenoidal (divergence-free) spectral projection: removes the gradient
/// part `ξ(ξ·û)/|ξ|²` from every nonzero mode. The mean (k = 0) component
/// passes through unchanged — a constant velocity is already
/// divergence-free.
pub fn leray_project(u: &Field) -> Result<Field> {
    let grid = u.grid().clone();
    let n = grid.dim();
    if u.components() != n {
        return Err(Error::InvalidParameter(
            "solenoidal projection expects a vector field".into(),
        ));
    }
    let spectral = u.spectral();
    let mut coeffs: Vec<_> = spectral.to_vec();
    let points = grid.points();
    let size = grid.size();
    let table: Vec<f64> = (0..points).map(|i| grid.xi(i)).collect();
    for pos in 0..size {
        let mut xi = [0.0f64; 3];
        let mut rem = pos;
        for ax in (0..n).rev() {
            xi[ax] = table[rem % points];
            rem /= points;
        }
        let norm_sq: f64 = xi[..n].iter().map(|x| x * x).sum();
        if norm_sq == 0.0 {
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for (c, coeff) in coeffs.iter().enumerate().take(n) {
            dot += coeff.as_slice().expect("row-major")[pos] * xi[c];
        }
        let factor = dot / norm_sq;
        for (c, coeff) in coeffs.iter_mut().enumerate().take(n) {
            coeff.as_slice_mut().expect("row-major")[pos] -= factor * xi[c];
        }
    }
    Field::from_spectral(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn projection_is_idempotent_and_kills_gradients() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let l = grid.length();
        let kappa = 2.0 * PI / l;
        // gradient part + solenoidal part + mean
        let u = Field::vector_from_fn(grid.clone(), |x, c| {
            let grad = kappa * (kappa * x[0]).cos() * if c == 0 { 1.0 } else { 0.0 };
            let sol = if c == 0 {
                -(kappa * x[1]).sin()
            } else {
                (kappa * x[0]).sin()
            };
            grad + sol + if c == 0 { 0.25 } else { -0.5 }
        })
        .unwrap();
        let p = leray_project(&u).unwrap();
        assert!(p.relative_divergence().unwrap() <= 1e-12);
        let pp = leray_project(&p).unwrap();
        assert!(p.sub(&pp).unwrap().max_abs() <= 1e-13);
        // mean preserved
        assert!((p.mean(0) - 0.25).abs() < 1e-13);
        assert!((p.mean(1) + 0.5).abs() < 1e-13);
        // the solenoidal part survives untouched
        let expected = Field::vector_from_fn(grid, |x, c| {
            if c == 0 {
                -(kappa * x[1]).sin() + 0.25
            } else {
                (kappa * x[0]).sin() - 0.5
            }
        })
        .unwrap();
        assert!(p.sub(&expected).unwrap().max_abs() <= 1e-12);
    }
}
