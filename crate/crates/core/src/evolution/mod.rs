//! Linear group, Duhamel quadrature, the split Picard solver, a reference
//! integrating-factor integrator and the KP scaling map.
//!
//! The equation is `u_t + u_xxx + gamma d_x^{-1} u_yy + beta d_x N(u) = 0`
//! with `N(u) = u²` (KP) or `u³/3` (modified KP). In Fourier variables
//!
//! ```text
//! u^(t) = e^{it phi} u0^ - beta ∫_0^t e^{i(t-t')phi} (i xi) N(u)^(t') dt'
//! ```

mod export;
mod picard;
mod reference;
mod rescale;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{zero_line_fraction, Axis, ZERO_LINE_TOL};
use crate::norms::SpectralTrajectory;
use crate::spectral::{dispersion_phi, forward_transform, inverse_transform, DispersionSign, Grid2D, SpectralField};

pub use export::{read_spectral_dump, spectral_dump, trajectory_csv, write_spectral_dump, write_trajectory_csv};
pub use picard::{picard_solve, ContractionReport, IterateRecord, PicardConfig, PicardSolution};
pub use reference::{pde_residual, reference_integrate, stable_step, ReferenceConfig};
pub use rescale::{rescale_field, rescale_onto, rescale_spectral, ScalingParams};

/// Nonlinear flux inside `d_x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `u²`.
    #[default]
    KpQuadratic,
    /// `u³ / 3`.
    MkpCubic,
}

impl Nonlinearity {
    /// Retained fraction of each axis: 2/3 for quadratic, 1/2 for cubic products.
    pub fn dealias_fraction(self) -> f64 {
        match self {
            Nonlinearity::KpQuadratic => 2.0 / 3.0,
            Nonlinearity::MkpCubic => 0.5,
        }
    }
}

/// `U(t)` with the phase table cached for one grid.
#[derive(Clone, Debug)]
pub struct LinearGroup {
    grid: Grid2D,
    sign: DispersionSign,
    phi: Vec<f64>,
}

impl LinearGroup {
    pub fn new(grid: Grid2D, sign: DispersionSign) -> Self {
        let ny = grid.ny();
        let mut phi = vec![0.0; grid.len()];
        for i in 0..grid.nx() {
            for j in 0..ny {
                phi[i * ny + j] = dispersion_phi(grid.xi(i), grid.lambda(j), sign);
            }
        }
        LinearGroup { grid, sign, phi }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn sign(&self) -> DispersionSign {
        self.sign
    }

    /// `phi` in storage order.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `e^{it phi} F`, Nyquist modes zeroed.
    pub fn apply(&self, f: &SpectralField, t: f64) -> SpectralField {
        debug_assert_eq!(*f.grid(), self.grid);
        let g = &self.grid;
        let ny = g.ny();
        let coeffs = f
            .coeffs()
            .iter()
            .zip(&self.phi)
            .enumerate()
            .map(|(k, (c, &p))| {
                if g.is_nyquist(k / ny, k % ny) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::from_polar(1.0, t * p)
                }
            })
            .collect();
        SpectralField::from_raw(*g, coeffs, f.is_real())
    }
}

fn require_zero_column(f: &SpectralField, op: &'static str) -> Result<()> {
    let r = zero_line_fraction(f, Axis::X);
    if r > ZERO_LINE_TOL {
        return Err(Error::ZeroModeEnergy { op, ratio: r });
    }
    Ok(())
}

/// `U(t) F = e^{it phi} F`. The `xi = 0` column must carry no energy.
pub fn propagate(f: &SpectralField, t: f64, s: DispersionSign) -> Result<SpectralField> {
    if !t.is_finite() {
        return Err(Error::NonFinite("propagate time"));
    }
    require_zero_column(f, "propagate")?;
    Ok(LinearGroup::new(*f.grid(), s).apply(f, t))
}

/// Keeps modes with `|m| <= frac Nx/2` and `|n| <= frac Ny/2`.
pub fn dealias(f: &SpectralField, frac: f64) -> SpectralField {
    let g = f.grid();
    let ny = g.ny();
    let mx = (frac * g.nx() as f64 / 2.0).floor() as i64;
    let my = (frac * ny as f64 / 2.0).floor() as i64;
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let (m, n) = (g.mode_x(k / ny), g.mode_y(k % ny));
            if m.abs() <= mx && n.abs() <= my && !g.is_nyquist(k / ny, k % ny) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SpectralField::from_raw(*g, coeffs, f.is_real())
}

/// `d_x N(u)` with dealiased inputs and output.
pub fn nonlinear_full(u: &SpectralField, kind: Nonlinearity) -> Result<SpectralField> {
    let frac = kind.dealias_fraction();
    let p = inverse_transform(&dealias(u, frac))?;
    let prod = match kind {
        Nonlinearity::KpQuadratic => p.map(|v| v * v),
        Nonlinearity::MkpCubic => p.map(|v| v * v * v / 3.0),
    };
    let f = dealias(&forward_transform(&prod), frac);
    let g = *f.grid();
    let ny = g.ny();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| c * Complex64::new(0.0, g.xi(k / ny)))
        .collect();
    Ok(SpectralField::from_raw(g, coeffs, true))
}

const SPLIT_TOL: f64 = 1e-12;

fn split(f: &SpectralField) -> (SpectralField, SpectralField) {
    let g = f.grid();
    let ny = g.ny();
    let mut hi = f.coeffs().to_vec();
    let mut lo = f.coeffs().to_vec();
    for (k, (h, l)) in hi.iter_mut().zip(lo.iter_mut()).enumerate() {
        if g.xi(k / ny).abs() >= 1.0 {
            *l = Complex64::new(0.0, 0.0);
        } else {
            *h = Complex64::new(0.0, 0.0);
        }
    }
    (SpectralField::from_raw(*g, hi, f.is_real()), SpectralField::from_raw(*g, lo, f.is_real()))
}

/// `(Q d_x N(w + v), (Id - Q) d_x N(w + v))`.
pub fn nonlinear_term(
    w: &SpectralField,
    v: &SpectralField,
    kind: Nonlinearity,
) -> Result<(SpectralField, SpectralField)> {
    if w.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let total = w.energy() + v.energy();
    if total > 0.0 {
        let off = w.energy_where(|xi, _| xi.abs() < 1.0) + v.energy_where(|xi, _| xi.abs() >= 1.0);
        if off / total > SPLIT_TOL {
            return Err(Error::Support { op: "nonlinear_term", ratio: off / total });
        }
    }
    Ok(split(&nonlinear_full(&w.add(v)?, kind)?))
}

/// Weights of `∫_0^{t_n} g` on uniform nodes, for every `n`, fourth order.
///
/// Even `n`: composite Simpson. Odd `n >= 3`: Simpson then the 3/8 rule on the
/// last three intervals. `n = 1`: the cubic through the first four nodes.
fn cumulative_weights(n: usize, h: f64) -> Vec<f64> {
    if n == 1 {
        // reaches past t_1 to node 3; callers guarantee it exists
        return [9.0, 19.0, -5.0, 1.0].iter().map(|c| c * h / 24.0).collect();
    }
    let mut w = vec![0.0; n + 1];
    if n == 0 {
        return w;
    }
    let even = if n % 2 == 0 { n } else { n - 3 };
    for k in (0..even).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if n % 2 == 1 {
        for (o, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[even + o] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// `D_n = ∫_0^{t_n} U(t_n - t') F(t') dt'` at every uniform node, from forcing samples.
pub(crate) fn cumulative_duhamel(group: &LinearGroup, forcing: &[SpectralField], h: f64) -> Vec<SpectralField> {
    let m = forcing.len() - 1;
    let g: Vec<SpectralField> = forcing.iter().enumerate().map(|(n, f)| group.apply(f, -(n as f64) * h)).collect();
    let zero = SpectralField::zeros(*group.grid());
    (0..=m)
        .map(|n| {
            if n == 0 {
                return zero.clone();
            }
            let w = cumulative_weights(n, h);
            let mut acc = vec![Complex64::new(0.0, 0.0); zero.coeffs().len()];
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    for (a, c) in acc.iter_mut().zip(g[k].coeffs()) {
                        *a += wk * c;
                    }
                }
            }
            let real = g[..w.len().min(g.len())].iter().all(|f| f.is_real());
            group.apply(&SpectralField::from_raw(*group.grid(), acc, real), n as f64 * h)
        })
        .collect()
}

fn check_substeps(m: usize) -> Result<()> {
    if m < 8 || m % 2 == 1 {
        return Err(Error::param("M", format!("need an even count >= 8, got {m}")));
    }
    Ok(())
}

/// `∫_0^t U(t - t') f(t') dt'` by composite Simpson on `M` intervals; `f` is
/// evaluated at the nodes `t_n = n t / M`.
pub fn duhamel_fn(
    grid: Grid2D,
    f: impl Fn(f64) -> Result<SpectralField>,
    t: f64,
    s: DispersionSign,
    m: usize,
) -> Result<SpectralField> {
    check_substeps(m)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("duhamel time"));
    }
    let group = LinearGroup::new(grid, s);
    let h = t / m as f64;
    let w = cumulative_weights(m, h);
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut real = true;
    for (n, &wn) in w.iter().enumerate() {
        let tn = n as f64 * h;
        let fn_ = f(tn)?;
        if *fn_.grid() != grid {
            return Err(Error::GridMismatch);
        }
        real &= fn_.is_real();
        let term = group.apply(&fn_, t - tn);
        for (a, c) in acc.iter_mut().zip(term.coeffs()) {
            *a += wn * c;
        }
    }
    Ok(SpectralField::from_raw(grid, acc, real))
}

/// [`duhamel_fn`] with the forcing read from a sampled trajectory.
///
/// Nodes that coincide with a sample use it directly; others use the cubic
/// through the four nearest samples.
pub fn duhamel(forcing: &SpectralTrajectory, t: f64, s: DispersionSign, m: usize) -> Result<SpectralField> {
    check_substeps(m)?;
    let times = &forcing.times;
    if times.is_empty() {
        return Err(Error::param("forcing", "empty trajectory"));
    }
    let (lo, hi) = (times[0].min(0.0), times[times.len() - 1]);
    let eps = 1e-12 * hi.abs().max(1.0);
    if times[0] > eps || t < lo - eps || t > hi + eps || t < 0.0 {
        return Err(Error::param("t", format!("{t} outside the forcing span [{}, {hi}]", times[0])));
    }
    let grid = *forcing.grid();
    duhamel_fn(grid, |tn| interpolate(forcing, tn), t, s, m)
}

fn interpolate(traj: &SpectralTrajectory, t: f64) -> Result<SpectralField> {
    let times = &traj.times;
    let scale = times[times.len() - 1].abs().max(1.0);
    if let Some(k) = times.iter().position(|&s| (s - t).abs() <= 1e-12 * scale) {
        return Ok(traj.fields[k].clone());
    }
    let n = times.len();
    if n < 4 {
        return Err(Error::param("forcing", "interpolation needs four samples"));
    }
    let right = times.partition_point(|&s| s < t);
    let start = right.saturating_sub(2).min(n - 4);
    let idx: Vec<usize> = (start..start + 4).collect();
    let grid = *traj.grid();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut real = true;
    for &a in &idx {
        let mut l = 1.0;
        for &b in &idx {
            if a != b {
                l *= (t - times[b]) / (times[a] - times[b]);
            }
        }
        real &= traj.fields[a].is_real();
        for (z, c) in acc.iter_mut().zip(traj.fields[a].coeffs()) {
            *z += l * c;
        }
    }
    Ok(SpectralField::from_raw(grid, acc, real))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::testing::smooth_field;
    use crate::spectral::{inverse_transform, PhysicalField};
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        Grid2D::new(PI, PI, 32, 32).unwrap()
    }

    #[test]
    fn identity_at_zero_time() {
        let f = smooth_field(grid(), 1);
        let g = propagate(&f, 0.0, DispersionSign::KpI).unwrap();
        assert_eq!(g, f);
    }

    #[test]
    fn single_mode_phase_speed() {
        let g = grid();
        let f = forward_transform(&PhysicalField::from_fn(g, |x, y| (x + y).cos()));
        for t in [0.1, 1.0] {
            let u = inverse_transform(&propagate(&f, t, DispersionSign::KpI).unwrap()).unwrap();
            let exact = PhysicalField::from_fn(g, |x, y| (x + y + 2.0 * t).cos());
            let err = u.sub(&exact).unwrap().max_abs();
            assert!(err < 1e-12, "t={t}: {err}");
        }
    }

    #[test]
    fn unitarity_and_group_law() {
        let f = smooth_field(grid(), 7);
        for s in [DispersionSign::KpI, DispersionSign::KpII] {
            for t in [0.1, 0.7, 1.0] {
                let g = propagate(&f, t, s).unwrap();
                assert!((g.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
                assert!(g.is_real());
            }
            for (a, b) in [(0.3, 0.4), (-0.5, 0.5)] {
                let two = propagate(&propagate(&f, a, s).unwrap(), b, s).unwrap();
                let one = propagate(&f, a + b, s).unwrap();
                assert!(two.sub(&one).unwrap().l2_norm() < 1e-12 * f.l2_norm());
            }
        }
    }

    #[test]
    fn propagate_refuses_mean_column() {
        let g = grid();
        let f = forward_transform(&PhysicalField::from_fn(g, |_, y| y.cos()));
        assert!(matches!(propagate(&f, 0.5, DispersionSign::KpI), Err(Error::ZeroModeEnergy { .. })));
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        let h = 0.1;
        for n in 1..12 {
            let w = cumulative_weights(n, h);
            let t = n as f64 * h;
            let q: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64 * h).powi(3)).sum();
            assert!((q - t.powi(4) / 4.0).abs() < 1e-14, "n={n}");
            let q: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64 * h).powi(2)).sum();
            assert!((q - t.powi(3) / 3.0).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn duhamel_zero_forcing() {
        let g = grid();
        let d = duhamel_fn(g, |_| Ok(SpectralField::zeros(g)), 0.7, DispersionSign::KpI, 16).unwrap();
        assert_eq!(d.l2_norm(), 0.0);
        assert!(duhamel_fn(g, |_| Ok(SpectralField::zeros(g)), 0.7, DispersionSign::KpI, 7).is_err());
        assert!(duhamel_fn(g, |_| Ok(SpectralField::zeros(g)), 0.7, DispersionSign::KpI, 6).is_err());
    }

    #[test]
    fn duhamel_short_time() {
        let g = Grid2D::new(4.0 * PI, 4.0 * PI, 32, 32).unwrap();
        let f = SpectralField::real_mode(g, 1, 0, Complex64::new(0.5, 0.0)).unwrap();
        let t = 1e-3;
        let d = duhamel_fn(g, |_| Ok(f.clone()), t, DispersionSign::KpI, 8).unwrap();
        let err = d.sub(&f.scale(t)).unwrap().l2_norm();
        assert!(err < 1e-5 * t * f.l2_norm(), "{err}");
    }

    #[test]
    fn duhamel_single_mode_closed_form() {
        let g = grid();
        let c = Complex64::new(0.3, -0.2);
        let f = SpectralField::real_mode(g, 1, 1, c).unwrap();
        let t = 1.0;
        let d = duhamel_fn(g, |_| Ok(f.clone()), t, DispersionSign::KpI, 64).unwrap();
        let phi = 2.0;
        let k = (Complex64::from_polar(1.0, t * phi) - 1.0) / Complex64::new(0.0, phi);
        let got = d.coeff(1, 1);
        assert!((got - k * c).norm() < 1e-8 * (k * c).norm(), "{got} vs {}", k * c);
        let got = d.coeff(-1, -1);
        assert!((got - (k * c).conj()).norm() < 1e-8 * (k * c).norm());
    }

    #[test]
    fn duhamel_from_samples() {
        let g = grid();
        let f = SpectralField::real_mode(g, 2, 1, Complex64::new(1.0, 0.0)).unwrap();
        // forcing f cos(t), sampled on 33 points; nodes of M = 16 coincide with samples
        let times: Vec<f64> = (0..=32).map(|n| n as f64 / 32.0).collect();
        let traj = SpectralTrajectory { times: times.clone(), fields: times.iter().map(|t| f.scale(t.cos())).collect() };
        let a = duhamel(&traj, 1.0, DispersionSign::KpI, 16).unwrap();
        let b = duhamel_fn(g, |t| Ok(f.scale(t.cos())), 1.0, DispersionSign::KpI, 16).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-14);
        // off-sample nodes go through the cubic
        let c = duhamel(&traj, 0.9, DispersionSign::KpI, 10).unwrap();
        let d = duhamel_fn(g, |t| Ok(f.scale(t.cos())), 0.9, DispersionSign::KpI, 10).unwrap();
        assert!(c.sub(&d).unwrap().l2_norm() < 1e-6 * d.l2_norm());
        assert!(duhamel(&traj, 1.5, DispersionSign::KpI, 16).is_err());
    }

    #[test]
    fn nonlinear_outputs_split() {
        let g = Grid2D::new(4.0 * PI, 4.0 * PI, 32, 32).unwrap();
        let z = SpectralField::zeros(g);
        let (a, b) = nonlinear_term(&z, &z, Nonlinearity::KpQuadratic).unwrap();
        assert_eq!(a.l2_norm() + b.l2_norm(), 0.0);

        let u = smooth_field(g, 3);
        let (w, v) = split(&u);
        for kind in [Nonlinearity::KpQuadratic, Nonlinearity::MkpCubic] {
            let (a, b) = nonlinear_term(&w, &v, kind).unwrap();
            let full = nonlinear_full(&u, kind).unwrap();
            assert!(a.add(&b).unwrap().sub(&full).unwrap().l2_norm() < 1e-12 * full.l2_norm());
            assert!(a.energy_where(|xi, _| xi.abs() < 1.0) == 0.0);
            assert!(b.energy_where(|xi, _| xi.abs() >= 1.0) == 0.0);
        }
        assert!(nonlinear_term(&v, &w, Nonlinearity::KpQuadratic).is_err());
    }

    #[test]
    fn nonlinear_single_mode() {
        // w = cos(2x): d_x w² = -2 sin(4x), all of it at |xi| = 4
        let g = Grid2D::new(PI, PI, 32, 32).unwrap();
        let w = forward_transform(&PhysicalField::from_fn(g, |x, _| (2.0 * x).cos()));
        let (a, b) = nonlinear_term(&w, &SpectralField::zeros(g), Nonlinearity::KpQuadratic).unwrap();
        assert!(b.l2_norm() < 1e-14);
        let exact = PhysicalField::from_fn(g, |x, _| -2.0 * (4.0 * x).sin());
        assert!(inverse_transform(&a).unwrap().sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn dealias_keeps_two_thirds() {
        let g = Grid2D::new(PI, PI, 12, 12).unwrap();
        let f = SpectralField::real_mode(g, 4, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(dealias(&f, 2.0 / 3.0), f);
        let f = SpectralField::real_mode(g, 5, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(dealias(&f, 2.0 / 3.0).l2_norm(), 0.0);
    }
}
