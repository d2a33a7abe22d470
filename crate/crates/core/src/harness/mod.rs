//! Ensemble checks of the linear estimates.
//!
//! Each catalog entry evaluates `LHS / RHS` on a seeded random ensemble at
//! the base grid and at the grid with doubled sample counts. Both grids carry
//! the same spectral band, so the two runs see the same continuum function
//! and only the sampling changes. An entry passes when every ratio is finite
//! and the ratios move by less than [`STABILITY_TOL`] under refinement.

mod appendix;
mod catalog;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{BumpProfile, DyadicIndex, Symbol, DEFAULT_EPSILON};
use crate::spectral::{inverse_transform, Grid2D, PhysicalField, SpectralField};

pub use appendix::{
    commutator_ratio, leibniz_check_1d, leibniz_ratio, weight_commutator_check_1d, Ensemble1d, Grid1D,
};
pub use catalog::{strichartz_ratio, Ratio};

/// Largest relative change of a ratio under grid doubling.
pub const STABILITY_TOL: f64 = 0.2;

/// Relative energy tolerated outside the support an estimate requires.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    /// `|c| ~ <xi>^-a <lambda>^-b`.
    Power { a: f64, b: f64 },
    /// One real mode `(m, n)`; the `a = b = inf` limit.
    SingleMode { m: i64, n: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    Full,
    QOnly,
    LowfreqOnly,
    /// `Q P+`.
    PplusOnly,
    /// `Q P-`.
    PminusOnly,
    SingleBlock { k: i32, j: i32 },
}

impl Support {
    fn weight(&self, xi: f64, lambda: f64) -> f64 {
        let ind = |s: Symbol| Symbol::value(&s, xi, lambda).re;
        match *self {
            Support::Full => 1.0,
            Support::QOnly => ind(Symbol::Q),
            Support::LowfreqOnly => ind(Symbol::Low),
            Support::PplusOnly => ind(Symbol::Q) * ind(Symbol::PPlus),
            Support::PminusOnly => ind(Symbol::Q) * ind(Symbol::PMinus),
            Support::SingleBlock { k, j } => BumpProfile.theta(DyadicIndex::new(k, j), xi, lambda),
        }
    }

    /// Relative energy of `f` outside the support.
    pub fn leak(&self, f: &SpectralField) -> f64 {
        let total = f.energy();
        if total == 0.0 {
            return 0.0;
        }
        f.energy_where(|xi, la| self.weight(xi, la) == 0.0) / total
    }
}

/// Law of one random field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub decay: Decay,
    pub support: Support,
    /// L² norm of the generated field.
    pub amplitude: f64,
    pub seed: u64,
    /// Largest `|m|`, `|n|` drawn; the grid's own band when absent.
    #[serde(default)]
    pub band: Option<[i64; 2]>,
}

impl SpectrumSpec {
    pub fn new(decay: Decay, support: Support, seed: u64) -> Self {
        SpectrumSpec { decay, support, amplitude: 1.0, seed, band: None }
    }

    pub fn validate(&self) -> Result<()> {
        if let Decay::Power { a, b } = self.decay {
            if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::param("decay", format!("exponents must be finite and >= 0, got ({a}, {b})")));
            }
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("amplitude", "must be positive"));
        }
        if let Some([bx, by]) = self.band {
            if bx < 1 || by < 0 {
                return Err(Error::param("band", format!("need |m| band >= 1 and |n| band >= 0, got [{bx}, {by}]")));
            }
        }
        Ok(())
    }
}

/// Real random field with independent complex Gaussian coefficients.
///
/// Modes are drawn in a fixed order over the band, so the same spec gives
/// the same function on every grid that contains the band.
pub fn random_spectrum(spec: &SpectrumSpec, grid: &Grid2D) -> Result<SpectralField> {
    spec.validate()?;
    let ny = grid.ny();
    let f = match spec.decay {
        Decay::SingleMode { m, n } => {
            if m == 0 {
                return Err(Error::param("decay", "single mode must have m != 0"));
            }
            SpectralField::real_mode(*grid, m, n, Complex64::new(1.0, 0.0))?
        }
        Decay::Power { a, b } => {
            let [bx, by] = spec.band.unwrap_or([grid.nx() as i64 / 2 - 1, ny as i64 / 2 - 1]);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
            for m in 1..=bx {
                for n in -by..=by {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let (Some(i), Some(j)) = (grid.index_x(m), grid.index_y(n)) else {
                        return Err(Error::param("band", format!("mode ({m}, {n}) is not on the grid")));
                    };
                    if grid.is_nyquist(i, j) {
                        return Err(Error::param("band", format!("mode ({m}, {n}) is a Nyquist mode")));
                    }
                    let (xi, la) = (grid.xi(i), grid.lambda(j));
                    let w = (1.0 + xi * xi).powf(-0.5 * a) * (1.0 + la * la).powf(-0.5 * b) * spec.support.weight(xi, la);
                    let c = Complex64::new(re, im) * (w / std::f64::consts::SQRT_2);
                    let (pi, pj) = grid.partner(i, j);
                    coeffs[i * ny + j] = c;
                    coeffs[pi * ny + pj] = c.conj();
                }
            }
            SpectralField::from_coeffs(*grid, coeffs)?
        }
    };
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(Error::param("support", "no mode of the band lies in the support"));
    }
    Ok(f.scale(spec.amplitude / norm))
}

pub fn random_field(spec: &SpectrumSpec, grid: &Grid2D) -> Result<PhysicalField> {
    inverse_transform(&random_spectrum(spec, grid)?)
}

/// Per-sample seed from the master seed, the estimate and the sample index.
pub fn derive_seed(master: u64, estimate: usize, sample: usize) -> u64 {
    let mut z = master ^ (estimate as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (sample as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimateId {
    SmoothingPlus,
    SmoothingMinus,
    SmoothingInhomog,
    MaximalXHigh,
    MaximalYHigh,
    MaximalXLow,
    MaximalYLow,
    WeightedMaximalX,
    WeightedMaximalLow,
    GroupWeighted,
    GroupWeightedLow,
    Strichartz,
    WeightedLinfty,
    WeightedLinftyLow,
    Scaling,
    FracLeibniz1d,
    WeightCommutator1d,
}

impl EstimateId {
    pub const ALL: [EstimateId; 17] = [
        EstimateId::SmoothingPlus,
        EstimateId::SmoothingMinus,
        EstimateId::SmoothingInhomog,
        EstimateId::MaximalXHigh,
        EstimateId::MaximalYHigh,
        EstimateId::MaximalXLow,
        EstimateId::MaximalYLow,
        EstimateId::WeightedMaximalX,
        EstimateId::WeightedMaximalLow,
        EstimateId::GroupWeighted,
        EstimateId::GroupWeightedLow,
        EstimateId::Strichartz,
        EstimateId::WeightedLinfty,
        EstimateId::WeightedLinftyLow,
        EstimateId::Scaling,
        EstimateId::FracLeibniz1d,
        EstimateId::WeightCommutator1d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateId::SmoothingPlus => "smoothing-plus",
            EstimateId::SmoothingMinus => "smoothing-minus",
            EstimateId::SmoothingInhomog => "smoothing-inhomog",
            EstimateId::MaximalXHigh => "maximal-x-high",
            EstimateId::MaximalYHigh => "maximal-y-high",
            EstimateId::MaximalXLow => "maximal-x-low",
            EstimateId::MaximalYLow => "maximal-y-low",
            EstimateId::WeightedMaximalX => "weighted-maximal-x",
            EstimateId::WeightedMaximalLow => "weighted-maximal-low",
            EstimateId::GroupWeighted => "group-weighted",
            EstimateId::GroupWeightedLow => "group-weighted-low",
            EstimateId::Strichartz => "strichartz",
            EstimateId::WeightedLinfty => "weighted-Linfty",
            EstimateId::WeightedLinftyLow => "weighted-Linfty-low",
            EstimateId::Scaling => "scaling",
            EstimateId::FracLeibniz1d => "frac-leibniz-1d",
            EstimateId::WeightCommutator1d => "weight-commutator-1d",
        }
    }

    fn index(self) -> usize {
        EstimateId::ALL.iter().position(|&e| e == self).unwrap_or(0)
    }

    /// Support the estimate is stated for.
    pub fn support(self) -> Support {
        use EstimateId::*;
        match self {
            SmoothingPlus => Support::PplusOnly,
            SmoothingMinus | SmoothingInhomog => Support::PminusOnly,
            MaximalXHigh | MaximalYHigh | WeightedMaximalX | GroupWeighted | WeightedLinfty => Support::QOnly,
            MaximalXLow | MaximalYLow | WeightedMaximalLow | GroupWeightedLow | WeightedLinftyLow => Support::LowfreqOnly,
            Strichartz | Scaling | FracLeibniz1d | WeightCommutator1d => Support::Full,
        }
    }

    pub fn is_1d(self) -> bool {
        matches!(self, EstimateId::FracLeibniz1d | EstimateId::WeightCommutator1d)
    }

    /// Comma-separated list of every id.
    pub fn catalog_list() -> String {
        EstimateId::ALL.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(", ")
    }
}

impl std::fmt::Display for EstimateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimateId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::param("estimate", format!("unknown id `{s}`; the catalog is: {}", EstimateId::catalog_list())))
    }
}

impl TryFrom<String> for EstimateId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimateId> for String {
    fn from(e: EstimateId) -> String {
        e.as_str().to_string()
    }
}

pub const DEFAULT_PROFILES: [Decay; 3] =
    [Decay::Power { a: 2.0, b: 2.0 }, Decay::Power { a: 3.0, b: 1.5 }, Decay::Power { a: 1.5, b: 3.0 }];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSpec {
    pub id: EstimateId,
    /// Base grid; refinement doubles both sample counts.
    pub grid: Grid2D,
    /// Decay laws, cycled over the samples.
    pub profiles: Vec<Decay>,
    pub support: Support,
    pub samples: usize,
    pub seed: u64,
    /// Time samples on `[-1, 1]` (or `[0, 1]` for the one-sided norms).
    pub t_samples: usize,
    pub epsilon: f64,
}

impl EstimateSpec {
    /// Defaults: `[-8, 8)²` at 64², 50 samples, 65 time samples.
    pub fn new(id: EstimateId) -> Self {
        EstimateSpec {
            id,
            grid: Grid2D::new(8.0, 8.0, 64, 64).expect("default grid is valid"),
            profiles: DEFAULT_PROFILES.to_vec(),
            support: id.support(),
            samples: 50,
            seed: 0,
            t_samples: 65,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        if self.profiles.is_empty() {
            return Err(Error::param("profiles", "need at least one decay profile"));
        }
        if self.t_samples < 64 {
            return Err(Error::param("t_samples", format!("need at least 64 time samples, got {}", self.t_samples)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::param("epsilon", format!("must lie in (0, 1/2), got {}", self.epsilon)));
        }
        if self.grid.ly() < 8.0 && !self.id.is_1d() {
            return Err(Error::param("grid", "Ly must be at least 8 so that 16 unit cells exist"));
        }
        let need = self.id.support();
        if need != Support::Full && self.support != need && !matches!(self.support, Support::SingleBlock { .. }) {
            return Err(Error::param("support", format!("{} is stated for {:?} data, got {:?}", self.id, need, self.support)));
        }
        Ok(())
    }

    /// Band drawn on both grids.
    pub fn band(&self) -> [i64; 2] {
        [self.grid.nx() as i64 / 2 - 1, self.grid.ny() as i64 / 2 - 1]
    }

    pub fn member(&self, sample: usize) -> SpectrumSpec {
        SpectrumSpec {
            decay: self.profiles[sample % self.profiles.len()],
            support: self.support,
            amplitude: 1.0,
            seed: derive_seed(self.seed, self.id.index(), sample),
            band: Some(self.band()),
        }
    }

    pub fn fine_grid(&self) -> Result<Grid2D> {
        self.grid.with_counts(2 * self.grid.nx(), 2 * self.grid.ny())
    }
}

/// Default specs for every catalog entry.
pub fn catalog() -> Vec<EstimateSpec> {
    EstimateId::ALL.iter().map(|&id| EstimateSpec::new(id)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub lhs_fine: f64,
    pub rhs_fine: f64,
    pub ratio_fine: f64,
}

impl SampleRecord {
    /// `|ratio_fine / ratio - 1|`, zero when both vanish.
    pub fn change(&self) -> f64 {
        relative_change(self.ratio, self.ratio_fine)
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b / a - 1.0).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: EstimateId,
    pub grid: [usize; 2],
    pub grid_fine: [usize; 2],
    pub samples: Vec<SampleRecord>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub max_ratio_fine: f64,
    pub median_ratio_fine: f64,
    /// `|max_ratio_fine / max_ratio - 1|`.
    pub growth: f64,
    pub max_sample_change: f64,
    /// No sample ratio moved by more than [`STABILITY_TOL`].
    pub resolved: bool,
    pub pass: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

impl EstimateReport {
    pub fn from_samples(id: EstimateId, grid: [usize; 2], grid_fine: [usize; 2], samples: Vec<SampleRecord>) -> Self {
        let coarse: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
        let fine: Vec<f64> = samples.iter().map(|s| s.ratio_fine).collect();
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let (max_ratio, max_ratio_fine) = (max(&coarse), max(&fine));
        let finite = coarse.iter().chain(&fine).all(|r| r.is_finite() && *r >= 0.0);
        let max_sample_change = samples.iter().map(|s| s.change()).fold(0.0, f64::max);
        let growth = relative_change(max_ratio, max_ratio_fine);
        let resolved = finite && max_sample_change <= STABILITY_TOL;
        EstimateReport {
            id,
            grid,
            grid_fine,
            max_ratio,
            median_ratio: median(&coarse),
            max_ratio_fine,
            median_ratio_fine: median(&fine),
            growth,
            max_sample_change,
            resolved,
            pass: finite && resolved && growth < STABILITY_TOL,
            samples,
        }
    }

    pub const CSV_HEADER: &'static str = "sample,seed,grid,lhs,rhs,ratio";

    /// One row per sample and grid.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        let label = |g: [usize; 2]| format!("{}x{}", g[0], g[1]);
        for (g, fine) in [(self.grid, false), (self.grid_fine, true)] {
            for s in &self.samples {
                let (l, r, q) = if fine { (s.lhs_fine, s.rhs_fine, s.ratio_fine) } else { (s.lhs, s.rhs, s.ratio) };
                let _ = writeln!(out, "{},{},{},{:.16e},{:.16e},{:.16e}", s.sample, s.seed, label(g), l, r, q);
            }
        }
        out
    }
}

/// Runs one catalog entry on both grids.
pub fn run_estimate_check(spec: &EstimateSpec) -> Result<EstimateReport> {
    spec.validate()?;
    if spec.id.is_1d() {
        let ens = Ensemble1d::from_spec(spec)?;
        return match spec.id {
            EstimateId::FracLeibniz1d => leibniz_check_1d(0.5, &ens),
            _ => weight_commutator_check_1d(0.5 + spec.epsilon, 0.5, &ens),
        };
    }
    let fine = spec.fine_grid()?;
    let samples = (0..spec.samples)
        .into_par_iter()
        .map(|k| {
            let member = spec.member(k);
            let coarse = catalog::evaluate(spec, &member, &spec.grid)?;
            let refined = catalog::evaluate(spec, &member, &fine)?;
            Ok(SampleRecord {
                sample: k,
                seed: member.seed,
                lhs: coarse.lhs,
                rhs: coarse.rhs,
                ratio: coarse.value(),
                lhs_fine: refined.lhs,
                rhs_fine: refined.rhs,
                ratio_fine: refined.value(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::from_samples(spec.id, [spec.grid.nx(), spec.grid.ny()], [fine.nx(), fine.ny()], samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub id: EstimateId,
    pub samples: usize,
    pub max_ratio: f64,
    pub max_ratio_fine: f64,
    pub growth: f64,
    pub max_sample_change: f64,
    pub resolved: bool,
    pub pass: bool,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub estimates: Vec<SummaryEntry>,
    pub all_pass: bool,
}

impl SweepSummary {
    pub fn from_reports(reports: &[EstimateReport]) -> Self {
        let estimates: Vec<SummaryEntry> = reports
            .iter()
            .map(|r| SummaryEntry {
                id: r.id,
                samples: r.samples.len(),
                max_ratio: r.max_ratio,
                max_ratio_fine: r.max_ratio_fine,
                growth: r.growth,
                max_sample_change: r.max_sample_change,
                resolved: r.resolved,
                pass: r.pass,
            })
            .collect();
        let all_pass = estimates.iter().all(|e| e.pass);
        SweepSummary { estimates, all_pass }
    }
}

/// Runs `specs`, writing `<id>.csv` per estimate and `summary.json` into `out`.
pub fn sweep_and_report(specs: &[EstimateSpec], out: &Path) -> Result<(Vec<EstimateReport>, SweepSummary)> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let reports = specs.par_iter().map(run_estimate_check).collect::<Result<Vec<_>>>()?;
    for r in &reports {
        let path = out.join(format!("{}.csv", r.id));
        std::fs::write(&path, r.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    let summary = SweepSummary::from_reports(&reports);
    let path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok((reports, summary))
}
