//! Split high/low Picard iteration on the Duhamel formula.

use serde::{Deserialize, Serialize};

use super::{cumulative_duhamel, nonlinear_full, require_zero_column, split, LinearGroup, Nonlinearity};
use crate::error::{Error, Result};
use crate::norms::{x_norm_all, y_norm_set_spectral, SpectralTrajectory, XParams};
use crate::spectral::{forward_transform, DispersionSign, PhysicalField, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub beta: f64,
    pub max_iter: usize,
    /// Relative size of the last update at which iteration stops.
    pub tol: f64,
    /// Uniform intervals on `[0, T]`; even, at least 8.
    #[serde(rename = "M")]
    pub substeps: usize,
    pub epsilon: f64,
    pub nonlinearity: Nonlinearity,
    pub sign: DispersionSign,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            t_final: 0.25,
            beta: 1.0,
            max_iter: 50,
            tol: 1e-10,
            substeps: 32,
            epsilon: crate::multipliers::DEFAULT_EPSILON,
            nonlinearity: Nonlinearity::KpQuadratic,
            sign: DispersionSign::KpI,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::param("T", format!("must be positive, got {}", self.t_final)));
        }
        if !self.beta.is_finite() {
            return Err(Error::param("beta", "must be finite"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if self.substeps < 8 || self.substeps % 2 == 1 {
            return Err(Error::param("M", format!("need an even count >= 8, got {}", self.substeps)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.t_final / self.substeps as f64;
        (0..=self.substeps).map(|n| n as f64 * h).collect()
    }
}

/// Norms after one application of the Picard map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    /// Solution norm of the high-frequency part.
    pub x_norm_w: f64,
    /// Low-frequency norm set of the low-frequency part.
    pub y_norm_v: f64,
    pub diff_w: f64,
    pub diff_v: f64,
    /// `max(diff_w, diff_v)`.
    pub diff: f64,
    /// `diff / previous diff`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterateRecord>,
    /// Largest observed ratio of successive updates.
    pub max_ratio: Option<f64>,
    /// Every observed ratio is below one.
    pub contraction_observed: bool,
    /// Largest relative energy on the wrong side of the split, over all iterates.
    pub split_leak: f64,
}

#[derive(Clone, Debug)]
pub struct PicardSolution {
    /// `u = w + v` at the nodes `t_n = n T / M`.
    pub trajectory: SpectralTrajectory,
    pub high: SpectralTrajectory,
    pub low: SpectralTrajectory,
    pub report: ContractionReport,
}

const GROWTH_LIMIT: f64 = 1e6;

fn leak(w: &[SpectralField], v: &[SpectralField]) -> f64 {
    w.iter()
        .zip(v)
        .map(|(w, v)| {
            let total = w.energy() + v.energy();
            if total == 0.0 {
                return 0.0;
            }
            let a = w.energy_where(|xi, _| xi.abs() < 1.0);
            let b = v.energy_where(|xi, _| xi.abs() >= 1.0);
            a.max(b) / total
        })
        .fold(0.0, f64::max)
}

fn sub_all(a: &[SpectralField], b: &[SpectralField]) -> Result<Vec<SpectralField>> {
    a.iter().zip(b).map(|(a, b)| a.sub(b)).collect()
}

/// Solves `w = U w0 - beta Q D(w + v)`, `v = U v0 - beta (Id - Q) D(w + v)` on `[0, T]`.
pub fn picard_solve(u0: &PhysicalField, cfg: &PicardConfig) -> Result<PicardSolution> {
    cfg.validate()?;
    let f0 = forward_transform(u0);
    require_zero_column(&f0, "picard_solve")?;
    let grid = *u0.grid();
    let group = LinearGroup::new(grid, cfg.sign);
    let times = cfg.times();
    let h = cfg.t_final / cfg.substeps as f64;
    let params = XParams::from_epsilon(cfg.epsilon);
    let (w0, v0) = split(&f0);
    let lin_w: Vec<SpectralField> = times.iter().map(|&t| group.apply(&w0, t)).collect();
    let lin_v: Vec<SpectralField> = times.iter().map(|&t| group.apply(&v0, t)).collect();

    let traj = |fields: Vec<SpectralField>| SpectralTrajectory { times: times.clone(), fields };
    let norms = |w: &[SpectralField], v: &[SpectralField]| -> Result<(f64, f64)> {
        Ok((x_norm_all(&traj(w.to_vec()), &params)?.value, y_norm_set_spectral(&traj(v.to_vec()), &params)?.value))
    };

    let mut w = lin_w.clone();
    let mut v = lin_v.clone();
    let (nw0, nv0) = norms(&w, &v)?;
    let scale0 = nw0.max(nv0);
    let mut history: Vec<IterateRecord> = Vec::new();
    let mut split_leak = leak(&w, &v);
    let mut converged = false;

    for iter in 1..=cfg.max_iter {
        let (new_w, new_v) = if cfg.beta == 0.0 {
            (lin_w.clone(), lin_v.clone())
        } else {
            let forcing = w
                .iter()
                .zip(&v)
                .map(|(a, b)| nonlinear_full(&a.add(b)?, cfg.nonlinearity))
                .collect::<Result<Vec<_>>>()?;
            let d = cumulative_duhamel(&group, &forcing, h);
            let mut nw = Vec::with_capacity(d.len());
            let mut nv = Vec::with_capacity(d.len());
            for (n, dn) in d.iter().enumerate() {
                let (dw, dv) = split(dn);
                nw.push(lin_w[n].lincomb(1.0, &dw, -cfg.beta)?);
                nv.push(lin_v[n].lincomb(1.0, &dv, -cfg.beta)?);
            }
            (nw, nv)
        };
        let finite = |fs: &[SpectralField]| fs.iter().all(|f| f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        if !finite(&new_w) || !finite(&new_v) {
            return Err(Error::Divergence { history });
        }
        let diff_w = x_norm_all(&traj(sub_all(&new_w, &w)?), &params)?.value;
        let diff_v = y_norm_set_spectral(&traj(sub_all(&new_v, &v)?), &params)?.value;
        w = new_w;
        v = new_v;
        split_leak = split_leak.max(leak(&w, &v));
        let (x_norm_w, y_norm_v) = norms(&w, &v)?;
        let diff = diff_w.max(diff_v);
        let ratio = history.last().filter(|p| p.diff > 0.0).map(|p| diff / p.diff);
        history.push(IterateRecord { iter, x_norm_w, y_norm_v, diff_w, diff_v, diff, ratio });
        let current = x_norm_w.max(y_norm_v);
        if !current.is_finite() || current > GROWTH_LIMIT * scale0.max(f64::MIN_POSITIVE) {
            return Err(Error::Divergence { history });
        }
        if diff <= cfg.tol * current {
            converged = true;
            break;
        }
    }

    let ratios: Vec<f64> = history.iter().filter_map(|r| r.ratio).collect();
    let max_ratio = ratios.iter().copied().reduce(f64::max);
    let report = ContractionReport {
        iterations: history.len(),
        converged,
        contraction_observed: ratios.iter().all(|&r| r < 1.0),
        max_ratio,
        history,
        split_leak,
    };
    let u = w.iter().zip(&v).map(|(a, b)| a.add(b)).collect::<Result<Vec<_>>>()?;
    Ok(PicardSolution { trajectory: traj(u), high: traj(w), low: traj(v), report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::propagate;
    use crate::spectral::{inverse_transform, Grid2D};
    use std::f64::consts::PI;

    fn data(amp: f64) -> PhysicalField {
        let g = Grid2D::new(4.0 * PI, 4.0 * PI, 32, 32).unwrap();
        let bump = PhysicalField::from_fn(g, |x, y| -x * (-(x * x + y * y) / 4.5).exp());
        // remove the xi = 0 column
        let f = forward_transform(&bump);
        let f = crate::spectral::apply_multiplier(&f, |xi, _| {
            if xi == 0.0 { 0.0.into() } else { 1.0.into() }
        })
        .unwrap();
        inverse_transform(&f).unwrap().scale(amp)
    }

    #[test]
    fn linear_case_is_one_iteration() {
        let u0 = data(1.0);
        let cfg = PicardConfig { beta: 0.0, substeps: 8, t_final: 0.5, ..Default::default() };
        let sol = picard_solve(&u0, &cfg).unwrap();
        assert_eq!(sol.report.iterations, 1);
        assert!(sol.report.converged);
        let f0 = forward_transform(&u0);
        for (t, u) in sol.trajectory.times.iter().zip(&sol.trajectory.fields) {
            let exact = propagate(&f0, *t, DispersionSign::KpI).unwrap();
            assert!(u.sub(&exact).unwrap().l2_norm() <= 1e-12 * exact.l2_norm());
        }
    }

    #[test]
    fn small_data_contracts() {
        let u0 = data(1e-3);
        let cfg = PicardConfig { substeps: 16, t_final: 0.25, ..Default::default() };
        let sol = picard_solve(&u0, &cfg).unwrap();
        let r = &sol.report;
        assert!(r.converged, "{r:?}");
        assert!(r.contraction_observed && r.max_ratio.unwrap() < 1.0);
        assert!(r.split_leak < 1e-12);
        assert!(r.iterations > 1);
    }

    #[test]
    fn divergence_carries_history() {
        let u0 = data(50.0);
        let cfg = PicardConfig { substeps: 8, t_final: 1.0, beta: 20.0, max_iter: 40, ..Default::default() };
        match picard_solve(&u0, &cfg) {
            Err(Error::Divergence { history }) => assert!(!history.is_empty()),
            other => panic!("expected divergence, got {:?}", other.map(|s| s.report)),
        }
    }

    #[test]
    fn config_checks() {
        let u0 = data(1.0);
        for cfg in [
            PicardConfig { substeps: 6, ..Default::default() },
            PicardConfig { substeps: 9, ..Default::default() },
            PicardConfig { tol: 0.0, ..Default::default() },
            PicardConfig { t_final: -1.0, ..Default::default() },
        ] {
            assert!(picard_solve(&u0, &cfg).is_err());
        }
        let g = *u0.grid();
        let mean = PhysicalField::from_fn(g, |_, y| y.cos());
        assert!(matches!(picard_solve(&mean, &PicardConfig::default()), Err(Error::ZeroModeEnergy { .. })));
    }

    #[test]
    fn config_roundtrip() {
        let cfg = PicardConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"T\"") && s.contains("\"M\"") && s.contains("kp_quadratic"));
        let back: PicardConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }
}
