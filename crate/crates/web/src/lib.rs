//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function returns a flat `Float64Array`; the page does the drawing.
//! The computations live in plain Rust functions so they can be tested natively.

use std::f64::consts::PI;

use kp_core::evolution::propagate;
use kp_core::kernels::{eval_kernel, required_points, KernelEvalSpec};
use kp_core::multipliers::{apply_chain, BumpProfile, DyadicIndex, Symbol};
use kp_core::spectral::{forward_transform, inverse_transform};
use kp_core::{DispersionSign, Grid2D, PhysicalField, Result};
use wasm_bindgen::prelude::*;

const MAX_FIELD_N: usize = 256;
const MAX_KERNEL_N: usize = 64;

/// Samples of `U(t) u0` for `u0 = -x exp(-(x² + y²) / 4.5)` on the `4 pi` box, row-major in `x`.
pub fn propagated_field(n: usize, t: f64, kp2: bool) -> Result<Vec<f64>> {
    let n = n.clamp(8, MAX_FIELD_N) & !1;
    let g = Grid2D::new(4.0 * PI, 4.0 * PI, n, n)?;
    let u0 = PhysicalField::from_fn(g, |x, y| -x * (-(x * x + y * y) / 4.5).exp());
    let f = apply_chain(&forward_transform(&u0), &[Symbol::NonZeroX])?;
    let sign = if kp2 { DispersionSign::KpII } else { DispersionSign::KpI };
    Ok(inverse_transform(&propagate(&f, t, sign)?)?.into_values())
}

/// `|I^t_{k,j}(x, y)|` on an `n x n` lattice over `[-extent, extent]²`, row-major in `y`.
pub fn kernel_abs_map(k: i32, j: i32, t: f64, n: usize, extent: f64) -> Result<Vec<f64>> {
    let n = n.clamp(2, MAX_KERNEL_N);
    let idx = DyadicIndex::new(k, j);
    let coord = |i: usize| -extent + 2.0 * extent * i as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = (coord(ix), coord(iy));
            let points = required_points(idx, t, x, y).max(KernelEvalSpec::DEFAULT_POINTS);
            let spec = KernelEvalSpec::new(idx, t).with_points(points);
            out.push(eval_kernel(&spec, x, y)?.norm());
        }
    }
    Ok(out)
}

/// Rows `psi(2^-k r)²` for `k` in `k_min..=k_max`, then their sum, at `samples` points of
/// `log2 r` in `[k_min - 1, k_max + 1]`. The first row holds the `r` values.
pub fn bump_partition(k_min: i32, k_max: i32, samples: usize) -> Vec<f64> {
    let samples = samples.max(2);
    let (lo, hi) = ((k_min - 1) as f64, (k_max + 1) as f64);
    let rs: Vec<f64> = (0..samples).map(|i| 2f64.powf(lo + (hi - lo) * i as f64 / (samples - 1) as f64)).collect();
    let mut out = rs.clone();
    let mut total = vec![0.0; samples];
    for k in k_min..=k_max {
        for (i, &r) in rs.iter().enumerate() {
            let v = BumpProfile.psi(r * 2f64.powi(-k)).powi(2);
            total[i] += v;
            out.push(v);
        }
    }
    out.extend(total);
    out
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = propagateField)]
pub fn propagate_field_js(n: usize, t: f64, kp2: bool) -> std::result::Result<Vec<f64>, JsError> {
    js(propagated_field(n, t, kp2))
}

#[wasm_bindgen(js_name = kernelMap)]
pub fn kernel_map_js(k: i32, j: i32, t: f64, n: usize, extent: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(kernel_abs_map(k, j, t, n, extent))
}

#[wasm_bindgen(js_name = bumpCurves)]
pub fn bump_curves_js(k_min: i32, k_max: i32, samples: usize) -> Vec<f64> {
    bump_partition(k_min, k_max, samples)
}
