//! Integrating-factor RK4 reference integrator and the discrete PDE residual.

use serde::{Deserialize, Serialize};

use super::{dealias, nonlinear_full, require_zero_column, LinearGroup, Nonlinearity};
use crate::error::{Error, Result};
use crate::norms::SpectralTrajectory;
use crate::spectral::{forward_transform, DispersionSign, Grid2D, PhysicalField, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Largest step; [`stable_step`] when absent.
    pub dt: Option<f64>,
    pub sign: DispersionSign,
    pub beta: f64,
    pub nonlinearity: Nonlinearity,
    /// Output intervals on `[0, T]`.
    pub samples: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            t_final: 0.25,
            dt: None,
            sign: DispersionSign::KpI,
            beta: 1.0,
            nonlinearity: Nonlinearity::KpQuadratic,
            samples: 32,
        }
    }
}

/// Largest `|phi|` over the modes kept by dealiasing.
fn max_phase(grid: &Grid2D, sign: DispersionSign, kind: Nonlinearity) -> f64 {
    let group = LinearGroup::new(*grid, sign);
    let ny = grid.ny();
    let frac = kind.dealias_fraction();
    let mx = (frac * grid.nx() as f64 / 2.0).floor() as i64;
    let my = (frac * ny as f64 / 2.0).floor() as i64;
    group
        .phi()
        .iter()
        .enumerate()
        .filter(|(k, _)| grid.mode_x(k / ny).abs() <= mx && grid.mode_y(k % ny).abs() <= my)
        .fold(0.0, |m, (_, p)| m.max(p.abs()))
}

/// `0.5 / max |phi|` over the dealiased modes.
pub fn stable_step(grid: &Grid2D, sign: DispersionSign, kind: Nonlinearity) -> f64 {
    0.5 / max_phase(grid, sign, kind).max(f64::MIN_POSITIVE)
}

const BLOWUP: f64 = 1e6;

/// RK4 for `V' = -beta e^{-it phi} d_x N(e^{it phi} V)`, `u^ = e^{it phi} V`.
pub fn reference_integrate(u0: &PhysicalField, cfg: &ReferenceConfig) -> Result<SpectralTrajectory> {
    if !(cfg.t_final > 0.0) || !cfg.t_final.is_finite() {
        return Err(Error::param("T", "must be positive"));
    }
    if cfg.samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    let grid = *u0.grid();
    let limit = stable_step(&grid, cfg.sign, cfg.nonlinearity);
    let dt = cfg.dt.unwrap_or(limit);
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Integrator(format!("step size {dt} rejected")));
    }
    if cfg.beta != 0.0 && dt > limit * (1.0 + 1e-12) {
        return Err(Error::Integrator(format!("step size {dt} exceeds 0.5 / max|phi| = {limit}")));
    }
    let f0 = forward_transform(u0);
    require_zero_column(&f0, "reference_integrate")?;
    let group = LinearGroup::new(grid, cfg.sign);
    let interval = cfg.t_final / cfg.samples as f64;
    let steps = (interval / dt).ceil().max(1.0) as usize;
    let h = interval / steps as f64;
    let norm0 = f0.l2_norm();

    let rhs = |t: f64, v: &SpectralField| -> Result<SpectralField> {
        let u = group.apply(v, t);
        Ok(group.apply(&nonlinear_full(&u, cfg.nonlinearity)?, -t).scale(-cfg.beta))
    };

    // moving frame; Nyquist modes are dropped by the group
    let mut v = group.apply(&f0, 0.0);
    let mut times = vec![0.0];
    let mut fields = vec![v.clone()];
    let mut t = 0.0;
    for s in 1..=cfg.samples {
        for _ in 0..steps {
            if cfg.beta != 0.0 {
                let k1 = rhs(t, &v)?;
                let k2 = rhs(t + h / 2.0, &v.lincomb(1.0, &k1, h / 2.0)?)?;
                let k3 = rhs(t + h / 2.0, &v.lincomb(1.0, &k2, h / 2.0)?)?;
                let k4 = rhs(t + h, &v.lincomb(1.0, &k3, h)?)?;
                let incr = k1.lincomb(1.0, &k2, 2.0)?.lincomb(1.0, &k3, 2.0)?.add(&k4)?;
                v = v.lincomb(1.0, &incr, h / 6.0)?;
            }
            t += h;
        }
        t = s as f64 * interval;
        let n = v.l2_norm();
        if !n.is_finite() || n > BLOWUP * norm0.max(f64::MIN_POSITIVE) {
            return Err(Error::Integrator(format!("blow-up before t = {t}")));
        }
        times.push(t);
        fields.push(group.apply(&v, t));
    }
    Ok(SpectralTrajectory { times, fields })
}

/// `||u_t - i phi u + beta d_x N(u)|| / ||u||`, summed over interior samples.
///
/// The time derivative is the fourth-order centred difference of the
/// moving-frame coefficients `e^{-it phi} u^`.
pub fn pde_residual(traj: &SpectralTrajectory, sign: DispersionSign, beta: f64, kind: Nonlinearity) -> Result<f64> {
    let times = &traj.times;
    let n = times.len();
    if n < 5 {
        return Err(Error::param("trajectory", "need five or more samples"));
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12 * h.abs().max(1.0)) {
        return Err(Error::param("trajectory", "samples must be uniform"));
    }
    let group = LinearGroup::new(*traj.grid(), sign);
    let moving: Vec<SpectralField> = traj.fields.iter().zip(times).map(|(f, &t)| group.apply(f, -t)).collect();
    let mut res = 0.0;
    let mut norm = 0.0;
    for k in 2..n - 2 {
        let d = moving[k - 2]
            .lincomb(1.0, &moving[k - 1], -8.0)?
            .lincomb(1.0, &moving[k + 1], 8.0)?
            .lincomb(1.0, &moving[k + 2], -1.0)?
            .scale(1.0 / (12.0 * h));
        let mut r = group.apply(&d, times[k]);
        if beta != 0.0 {
            r = r.lincomb(1.0, &nonlinear_full(&traj.fields[k], kind)?, beta)?;
        }
        res += r.energy();
        norm += dealias(&traj.fields[k], 1.0).energy();
    }
    Ok((res / norm).sqrt())
}
