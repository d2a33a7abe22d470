//! One-dimensional checks: fractional Leibniz rule and the weight commutator.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::{derive_seed, Decay, EstimateId, EstimateReport, EstimateSpec, Ratio, SampleRecord};
use crate::error::{Error, Result};
use crate::spectral::fft::fft_1d;

/// Periodic grid on `[-L, L)` with `n` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub l: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid { field: "L", reason: format!("must be positive, got {l}") });
        }
        if n < 8 || n % 2 == 1 {
            return Err(Error::InvalidGrid { field: "N", reason: format!("must be even and at least 8, got {n}") });
        }
        Ok(Grid1D { l, n })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.dx()
    }

    fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn l2(&self, v: &[f64]) -> f64 {
        (v.iter().map(|a| a * a).sum::<f64>() * self.dx()).sqrt()
    }

    /// Applies the real even symbol `m(|xi|)`; the Nyquist mode is dropped.
    pub fn apply(&self, v: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut data: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        fft_1d(&mut data, FftDirection::Forward);
        let scale = 1.0 / self.n as f64;
        for (i, c) in data.iter_mut().enumerate() {
            let k = self.mode(i);
            *c *= if i == self.n / 2 { 0.0 } else { m(std::f64::consts::PI * k.abs() as f64 / self.l) * scale };
        }
        fft_1d(&mut data, FftDirection::Inverse);
        data.into_iter().map(|c| c.re).collect()
    }

    pub fn d_sigma(&self, v: &[f64], sigma: f64) -> Vec<f64> {
        self.apply(v, |xi| if xi == 0.0 { 0.0 } else { xi.powf(sigma) })
    }

    /// Real random field on modes `1..=band` with `|c| ~ <xi>^-a`, unit L² norm.
    pub fn random(&self, band: usize, a: f64, seed: u64) -> Result<Vec<f64>> {
        if band == 0 || band >= self.n / 2 {
            return Err(Error::param("band", format!("must lie in 1..{}, got {band}", self.n / 2)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.n];
        for m in 1..=band {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let xi = std::f64::consts::PI * m as f64 / self.l;
            let c = Complex64::new(re, im) * (1.0 + xi * xi).powf(-0.5 * a);
            coeffs[m] = c;
            coeffs[self.n - m] = c.conj();
        }
        fft_1d(&mut coeffs, FftDirection::Inverse);
        let v: Vec<f64> = coeffs.into_iter().map(|c| c.re).collect();
        let norm = self.l2(&v);
        Ok(v.into_iter().map(|a| a / norm).collect())
    }
}

/// `||D^s(fg) - f D^s g - g D^s f|| / (||g||_inf ||D^s f||)`.
pub fn leibniz_ratio(grid: &Grid1D, f: &[f64], g: &[f64], sigma: f64) -> Ratio {
    let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
    let (dfg, df, dg) = (grid.d_sigma(&fg, sigma), grid.d_sigma(f, sigma), grid.d_sigma(g, sigma));
    let term: Vec<f64> = (0..f.len()).map(|i| dfg[i] - f[i] * dg[i] - g[i] * df[i]).collect();
    let sup = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ratio { lhs: grid.l2(&term), rhs: sup * grid.l2(&df) }
}

/// `||[<y>^a, (1 + D)^g] f|| / ||<y>^a f||`.
pub fn commutator_ratio(grid: &Grid1D, f: &[f64], alpha: f64, gamma: f64) -> Ratio {
    let w: Vec<f64> = (0..grid.n).map(|i| (1.0 + grid.x(i).powi(2)).powf(0.5 * alpha)).collect();
    let op = |v: &[f64]| grid.apply(v, |xi| (1.0 + xi).powf(gamma));
    let wf: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
    let a = op(f);
    let b = op(&wf);
    let diff: Vec<f64> = (0..grid.n).map(|i| w[i] * a[i] - b[i]).collect();
    Ratio { lhs: grid.l2(&diff), rhs: grid.l2(&wf) }
}

/// Ensemble of one-dimensional random fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble1d {
    /// Base grid; refinement doubles `n`.
    pub grid: Grid1D,
    pub samples: usize,
    /// Decay exponents, cycled over the samples.
    pub decay: Vec<f64>,
    pub seed: u64,
}

impl Ensemble1d {
    /// The x-axis of the spec's grid with its decay profiles.
    pub fn from_spec(spec: &EstimateSpec) -> Result<Self> {
        let decay = spec
            .profiles
            .iter()
            .map(|d| match d {
                Decay::Power { a, .. } => Ok(*a),
                Decay::SingleMode { .. } => Err(Error::param("profiles", "one-dimensional checks need power-law profiles")),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble1d { grid: Grid1D::new(spec.grid.lx(), spec.grid.nx())?, samples: spec.samples, decay, seed: spec.seed })
    }

    /// Band that keeps products alias-free on the base grid.
    pub fn band(&self) -> usize {
        self.grid.n / 4 - 1
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.decay.is_empty() {
            return Err(Error::param("ensemble", "need at least one sample and one decay exponent"));
        }
        if self.decay.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::param("decay", "exponents must be finite and >= 0"));
        }
        Ok(())
    }
}

fn run_1d(id: EstimateId, ens: &Ensemble1d, eval: impl Fn(&Grid1D, u64, f64) -> Result<Ratio> + Sync) -> Result<EstimateReport> {
    ens.validate()?;
    let fine = Grid1D::new(ens.grid.l, 2 * ens.grid.n)?;
    let samples = (0..ens.samples)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(ens.seed, id.index(), k);
            let a = ens.decay[k % ens.decay.len()];
            let c = eval(&ens.grid, seed, a)?;
            let f = eval(&fine, seed, a)?;
            Ok(SampleRecord {
                sample: k,
                seed,
                lhs: c.lhs,
                rhs: c.rhs,
                ratio: c.value(),
                lhs_fine: f.lhs,
                rhs_fine: f.rhs,
                ratio_fine: f.value(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::from_samples(id, [ens.grid.n, 1], [fine.n, 1], samples))
}

/// Fractional Leibniz rule at `p = 2` on random `f`, `g`; `g` carries a random mean.
pub fn leibniz_check_1d(sigma: f64, ens: &Ensemble1d) -> Result<EstimateReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    let band = ens.band();
    run_1d(EstimateId::FracLeibniz1d, ens, |grid, seed, a| {
        let f = grid.random(band, a, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mean: f64 = StandardNormal.sample(&mut rng);
        let g: Vec<f64> = grid.random(band, a, derive_seed(seed, usize::MAX, 1))?.into_iter().map(|v| v + mean).collect();
        Ok(leibniz_ratio(grid, &f, &g, sigma))
    })
}

/// Weight commutator at `p = 2`.
pub fn weight_commutator_check_1d(alpha: f64, gamma: f64, ens: &Ensemble1d) -> Result<EstimateReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    let band = ens.band();
    run_1d(EstimateId::WeightCommutator1d, ens, |grid, seed, a| {
        Ok(commutator_ratio(grid, &grid.random(band, a, seed)?, alpha, gamma))
    })
}
