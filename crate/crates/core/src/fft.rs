//! Multi-dimensional FFT plumbing on top of rustfft.
//!
//! Transforms are applied axis by axis on complex arrays. Plans are cached
//! globally and shared across threads; per-thread scratch buffers keep the
//! hot path allocation-free. The forward transform is normalized by `1/N^n`
//! so coefficients are Fourier-series coefficients of the periodic field:
//! `u(x) = Σ_k û(k) e^{i 2πk·x/L}`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{ArrayD, Axis, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanKey = (usize, bool);
type PlanMap = HashMap<PlanKey, Arc<dyn Fft<f64>>>;

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<PlanMap>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, forward))
        .or_insert_with(|| {
            let direction = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            FftPlanner::new().plan_fft(len, direction)
        })
        .clone()
}

thread_local! {
    static LANE_BUF: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
    static SCRATCH_BUF: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

fn transform_axis(data: &mut ArrayD<Complex64>, axis: usize, forward: bool) {
    let len = data.shape()[axis];
    let fft = plan(len, forward);
    let scratch_len = fft.get_inplace_scratch_len();
    Zip::from(data.lanes_mut(Axis(axis))).par_for_each(|mut lane| {
        LANE_BUF.with(|buf| {
            SCRATCH_BUF.with(|scratch| {
                let mut buf = buf.borrow_mut();
                let mut scratch = scratch.borrow_mut();
                buf.clear();
                buf.extend(lane.iter().copied());
                scratch.resize(scratch_len, Complex64::default());
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (dst, src) in lane.iter_mut().zip(buf.iter()) {
                    *dst = *src;
                }
            })
        })
    });
}

/// In-place forward DFT over every axis, normalized by `1/N^n`.
pub fn forward(data: &mut ArrayD<Complex64>) {
    let ndim = data.ndim();
    for ax in 0..ndim {
        transform_axis(data, ax, true);
    }
    let norm = 1.0 / data.len() as f64;
    data.par_mapv_inplace(|v| v * norm);
}

/// In-place inverse DFT over every axis (unnormalized sum, matching the
/// `1/N^n`-normalized forward transform).
pub fn inverse(data: &mut ArrayD<Complex64>) {
    let ndim = data.ndim();
    for ax in 0..ndim {
        transform_axis(data, ax, false);
    }
}

/// Forward transform of a real array into complex coefficients.
pub fn forward_real(values: &ArrayD<f64>) -> ArrayD<Complex64> {
    let mut data = values.mapv(|v| Complex64::new(v, 0.0));
    forward(&mut data);
    data
}

/// Inverse transform of complex coefficients, keeping the real part.
pub fn inverse_to_real(coeffs: &ArrayD<Complex64>) -> ArrayD<f64> {
    let mut data = coeffs.clone();
    inverse(&mut data);
    data.mapv(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::IxDyn;

    #[test]
    fn forward_then_inverse_is_identity() {
        let shape = IxDyn(&[32, 32]);
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let values = ArrayD::from_shape_fn(shape, |_| next());
        let coeffs = forward_real(&values);
        let back = inverse_to_real(&coeffs);
        let err = values
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-13, "round-trip error {err}");
    }

    #[test]
    fn cosine_transforms_to_symmetric_half_modes() {
        let n = 64;
        let values = ArrayD::from_shape_fn(IxDyn(&[n, n]), |idx| {
            let x = idx[0] as f64 / n as f64;
            (2.0 * std::f64::consts::PI * x).cos()
        });
        let coeffs = forward_real(&values);
        assert!((coeffs[[1, 0]].norm() - 0.5).abs() < 1e-12);
        assert!((coeffs[[n - 1, 0]].norm() - 0.5).abs() < 1e-12);
        let stray: f64 = coeffs
            .indexed_iter()
            .filter(|(idx, _)| !(idx[1] == 0 && (idx[0] == 1 || idx[0] == n - 1)))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(stray < 1e-13);
    }
}
