use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    p.plan_fft(len, direction)
}

/// Unnormalized in-place 1-D transform.
pub(crate) fn fft_1d(data: &mut [Complex64], direction: FftDirection) {
    plan(data.len(), direction).process(data);
}

/// Unnormalized in-place 2-D transform of a row-major `nx x ny` array
/// (index `i * ny + j`, `i` along x).
pub(crate) fn fft_2d(data: &mut [Complex64], nx: usize, ny: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), nx * ny);
    plan(ny, direction).process(data);
    let mut t = transpose(data, nx, ny);
    plan(nx, direction).process(&mut t);
    let back = transpose(&t, ny, nx);
    data.copy_from_slice(&back);
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}
