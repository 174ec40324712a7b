use std::cell::RefCell;
use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static REAL_PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
}

pub(crate) fn inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

pub(crate) fn real_forward(n: usize) -> Arc<dyn RealToComplex<f64>> {
    REAL_PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

/// Full complex spectrum of a real signal (length `x.len()`, unnormalized).
pub(crate) fn real_spectrum(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let r2c = real_forward(n);
    let mut input = x.to_vec();
    let mut half = r2c.make_output_vec();
    r2c.process(&mut input, &mut half)
        .expect("buffer sizes come from the plan");
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    full[..half.len()].copy_from_slice(&half);
    for k in half.len()..n {
        full[k] = half[n - k].conj();
    }
    full
}
