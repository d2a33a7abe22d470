//! Dyadic oscillatory kernels of the KP-I group and their decay-exponent tables.
//!
//! The kernel of the block `(k, j)` is
//!
//! ```text
//! I^t_{k,j}(x, y) = ∫∫ exp(i (t phi(xi, lambda) + x xi + y lambda)) theta_{k,j}(xi, lambda) dxi dlambda
//! ```
//!
//! with the KP-I dispersion `phi = xi³ + lambda²/xi`. In the coordinates
//! `a = |xi|`, `b = |lambda/xi|` each sign quadrant of the support becomes the
//! box `[2^(k-1), 2^(k+1)] × [2^(j-1), 2^(j+1)]` with Jacobian `a`.
//!
//! Because `phi` is odd and `theta` is even, the kernel is real, even in `y`,
//! and `I^{-t}(x, y) = I^t(-x, y)`.

mod gauss;
mod sweep;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{BumpProfile, DyadicIndex};

pub use gauss::{gauss_legendre, gauss_legendre_on};
pub use sweep::{
    fit_slope, kernel_sweep, verify_kernel_bound, verify_kernel_bound_with, KernelBoundReport,
    KernelSweep, KernelTimeRow, SlopeFit, SweepConfig,
};

/// `alpha(k, j)`: `5k/2 + j` for `k >= 0`, `j` for `k <= 0`.
pub fn exponent_alpha(k: i32, j: i32) -> f64 {
    if k >= 0 {
        2.5 * k as f64 + j as f64
    } else {
        j as f64
    }
}

/// Case of the `delta` table that applies at `(k, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaBranch {
    /// `k >= max(0, j)`: `5k/2 + j`.
    High,
    /// `j >= k >= 0`, or `k < 0` and `k >= 2j`: `3k/2 + 2j`.
    Mixed,
    /// `k < min(0, 2j)`: `2k + j`.
    Low,
}

/// All branches whose condition holds at `(k, j)`, in table order.
pub fn delta_branches(k: i32, j: i32) -> Vec<DeltaBranch> {
    let mut out = Vec::with_capacity(2);
    if k >= 0.max(j) {
        out.push(DeltaBranch::High);
    }
    if (j >= k && k >= 0) || (k < 0 && k >= 2 * j) {
        out.push(DeltaBranch::Mixed);
    }
    if k < 0.min(2 * j) {
        out.push(DeltaBranch::Low);
    }
    out
}

/// First matching branch of the table. Total on `Z²`.
pub fn delta_branch(k: i32, j: i32) -> DeltaBranch {
    delta_branches(k, j)[0]
}

pub fn delta_value(branch: DeltaBranch, k: i32, j: i32) -> f64 {
    let (k, j) = (k as f64, j as f64);
    match branch {
        DeltaBranch::High => 2.5 * k + j,
        DeltaBranch::Mixed => 1.5 * k + 2.0 * j,
        DeltaBranch::Low => 2.0 * k + j,
    }
}

pub fn exponent_delta(k: i32, j: i32) -> f64 {
    delta_value(delta_branch(k, j), k, j)
}

/// The closed form `max(2k + j, -chi(j >= 0) 2j, chi(j >= 0)(5k/2 + j))`.
///
/// Reported next to the table value for comparison only.
pub fn exponent_delta_alt(k: i32, j: i32) -> f64 {
    let (kf, jf) = (k as f64, j as f64);
    let chi = if j >= 0 { 1.0 } else { 0.0 };
    (2.0 * kf + jf).max(-chi * 2.0 * jf).max(chi * (2.5 * kf + jf))
}

/// `beta(k, j)`: `k/2 + j` for `k >= j`, `3k/2` for `k < j`.
pub fn exponent_beta(k: i32, j: i32) -> f64 {
    if k >= j {
        0.5 * k as f64 + j as f64
    } else {
        1.5 * k as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub delta_branch: DeltaBranch,
}

impl ExponentTable {
    pub fn at(idx: DyadicIndex) -> Self {
        ExponentTable {
            alpha: exponent_alpha(idx.k, idx.j),
            delta: exponent_delta(idx.k, idx.j),
            beta: exponent_beta(idx.k, idx.j),
            delta_branch: delta_branch(idx.k, idx.j),
        }
    }
}

/// Quadrature request for one kernel value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEvalSpec {
    pub idx: DyadicIndex,
    pub t: f64,
    /// Gauss-Legendre points per axis and quadrant.
    pub points: usize,
    /// Number of unit `y` cells on each side of the origin.
    pub s_max: usize,
    /// Number of unit `x` cells on each side of the origin.
    pub r_max: usize,
}

impl KernelEvalSpec {
    pub const DEFAULT_POINTS: usize = 64;

    pub fn new(idx: DyadicIndex, t: f64) -> Self {
        KernelEvalSpec { idx, t, points: Self::DEFAULT_POINTS, s_max: 8, r_max: 8 }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || self.t.abs() > 1.0 {
            return Err(Error::param("t", format!("{} is outside [-1, 1]", self.t)));
        }
        if self.points < 16 {
            return Err(Error::param("points", format!("{} < 16", self.points)));
        }
        if self.s_max < 8 || self.r_max < 8 {
            return Err(Error::param("extents", format!("({}, {}) below 8", self.s_max, self.r_max)));
        }
        Ok(())
    }
}

/// `a`- and `b`-intervals of the block.
pub(crate) fn block_box(idx: DyadicIndex) -> ([f64; 2], [f64; 2]) {
    let a = 2f64.powi(idx.k);
    let b = 2f64.powi(idx.j);
    ([0.5 * a, 2.0 * a], [0.5 * b, 2.0 * b])
}

/// Largest number of phase cycles across the block along either axis.
pub fn phase_cycles(idx: DyadicIndex, t: f64, x: f64, y: f64) -> f64 {
    let ([a0, a1], [b0, b1]) = block_box(idx);
    let mut da: f64 = 0.0;
    let mut db: f64 = 0.0;
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            let mut bs = vec![b0, b1];
            if t != 0.0 {
                let v = -s2 * y / (2.0 * s1 * t);
                if v > b0 && v < b1 {
                    bs.push(v);
                }
            }
            for &a in &[a0, a1] {
                for &b in &bs {
                    da = da.max((s1 * (t * (3.0 * a * a + b * b) + x) + s2 * y * b).abs());
                }
                for &b in &[b0, b1] {
                    db = db.max((a * (2.0 * s1 * t * b + s2 * y)).abs());
                }
            }
        }
    }
    (da * (a1 - a0)).max(db * (b1 - b0)) / (2.0 * PI)
}

/// Minimum points per axis for the phase at `(t, x, y)`: eight per cycle.
pub fn required_points(idx: DyadicIndex, t: f64, x: f64, y: f64) -> usize {
    (8.0 * phase_cycles(idx, t, x, y)).ceil() as usize
}

/// Tensor Gauss-Legendre quadrature of `I^t_{k,j}(x, y)` over the four sign quadrants.
pub fn eval_kernel(spec: &KernelEvalSpec, x: f64, y: f64) -> Result<Complex64> {
    spec.validate()?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite("eval_kernel point"));
    }
    let required = required_points(spec.idx, spec.t, x, y);
    if spec.points < required {
        return Err(Error::UnderResolved { required, given: spec.points });
    }
    Ok(quadrature(spec.idx, spec.points, |a, b, s1, s2| {
        spec.t * s1 * (a * a * a + a * b * b) + x * s1 * a + y * s2 * a * b
    }))
}

/// `∫ theta_{k,j}` by the same rule with zero phase.
pub fn block_area(idx: DyadicIndex, points: usize) -> f64 {
    quadrature(idx, points, |_, _, _, _| 0.0).re
}

fn quadrature(idx: DyadicIndex, n: usize, phase: impl Fn(f64, f64, f64, f64) -> f64) -> Complex64 {
    let bump = BumpProfile;
    let ([a0, a1], [b0, b1]) = block_box(idx);
    let (an, aw) = gauss_legendre_on(n, a0, a1);
    let (bn, bw) = gauss_legendre_on(n, b0, b1);
    let sa = 2f64.powi(-idx.k);
    let sb = 2f64.powi(-idx.j);
    let wa: Vec<f64> = an.iter().zip(&aw).map(|(&a, &w)| w * a * bump.psi(a * sa)).collect();
    let wb: Vec<f64> = bn.iter().zip(&bw).map(|(&b, &w)| w * bump.psi(b * sb)).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            for (&a, &wa) in an.iter().zip(&wa) {
                if wa == 0.0 {
                    continue;
                }
                let mut row = Complex64::new(0.0, 0.0);
                for (&b, &wb) in bn.iter().zip(&wb) {
                    if wb != 0.0 {
                        row += wb * Complex64::from_polar(1.0, phase(a, b, s1, s2));
                    }
                }
                total += wa * row;
            }
        }
    }
    total
}
