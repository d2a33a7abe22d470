//! Declarative run configuration, read from TOML.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use kp_core::evolution::{Nonlinearity, PicardConfig};
use kp_core::harness::{Decay, EstimateId, EstimateSpec};
use kp_core::kernels::SweepConfig;
use kp_core::{DispersionSign, Error, Grid2D};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}: {}", self.path, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), reason: reason.into() }
}

/// Rewrites a core validation error as a config error under `section`.
pub fn from_core(section: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidGrid { field, reason } => invalid(format!("grid.{field}"), reason),
        Error::InvalidParameter { name, reason } => invalid(format!("{section}.{name}"), reason),
        other => invalid(section, other.to_string()),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "Lx")]
    pub lx: Option<f64>,
    #[serde(rename = "Ly")]
    pub ly: Option<f64>,
    #[serde(rename = "Nx")]
    pub nx: Option<usize>,
    #[serde(rename = "Ny")]
    pub ny: Option<usize>,
}

impl GridSection {
    /// The configured grid, with unset fields taken from `base`.
    pub fn resolve(&self, base: Grid2D) -> Result<Grid2D, ConfigError> {
        let g = Grid2D::new(
            self.lx.unwrap_or(base.lx()),
            self.ly.unwrap_or(base.ly()),
            self.nx.unwrap_or(base.nx()),
            self.ny.unwrap_or(base.ny()),
        );
        g.map_err(|e| from_core("grid", e))
    }

    pub fn is_set(&self) -> bool {
        *self != GridSection::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// `-x exp(-(x² + y²) / 4.5)` with the `xi = 0` column removed.
    #[default]
    Bump,
    /// A member of the random ensemble, restricted to `xi != 0`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(rename = "M")]
    pub substeps: usize,
    pub nonlinearity: Nonlinearity,
    pub epsilon: f64,
    pub sign: DispersionSign,
    pub initial: InitialData,
    /// Size of the initial data in the `Z0` norm.
    pub amplitude: f64,
    /// Also run the reference integrator and compare.
    pub reference: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = PicardConfig::default();
        SolverSection {
            t_final: p.t_final,
            beta: p.beta,
            tol: p.tol,
            max_iter: p.max_iter,
            substeps: p.substeps,
            nonlinearity: p.nonlinearity,
            epsilon: p.epsilon,
            sign: p.sign,
            initial: InitialData::Bump,
            amplitude: 1e-3,
            reference: true,
        }
    }
}

impl SolverSection {
    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            t_final: self.t_final,
            beta: self.beta,
            max_iter: self.max_iter,
            tol: self.tol,
            substeps: self.substeps,
            epsilon: self.epsilon,
            nonlinearity: self.nonlinearity,
            sign: self.sign,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Decay exponents `[a, b]` cycled over the samples.
    pub profiles: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Estimate ids; the whole catalog when absent.
    pub estimates: Option<Vec<String>>,
    pub k_window: [i32; 2],
    pub j_window: [i32; 2],
    pub t_samples: Option<Vec<f64>>,
    pub budget: f64,
    pub check_tol: f64,
    /// Scaling factors for the `scaling` command.
    pub rho: Vec<f64>,
    /// `[sigma, alpha]` pairs for the weighted scaling norms.
    pub weighted: Vec<[f64; 2]>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = SweepConfig::default();
        SweepSection {
            estimates: None,
            k_window: [0, 3],
            j_window: [0, 3],
            t_samples: None,
            budget: s.budget,
            check_tol: s.check_tol,
            rho: vec![0.5, 0.25, 0.125, 0.0625],
            weighted: vec![[1.0, 0.25], [2.0, 0.5]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Png,
    /// Plain-text spectral dump of the solver trajectory.
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Summary JSON files are always written.
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("kp-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub ensemble: EnsembleSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

pub fn solve_base_grid() -> Grid2D {
    Grid2D::new(4.0 * PI, 4.0 * PI, 64, 64).expect("valid grid")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let reason = e.message().to_string();
            let path = e
                .span()
                .map(|s| key_path(text, s.start))
                .filter(|p| !p.is_empty())
                .unwrap_or_else(|| "config".to_string());
            invalid(path, reason)
        })
    }

    /// Checks every section against the preconditions of the routines it feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.resolve(solve_base_grid())?;
        self.picard_checked()?;
        self.estimate_specs()?;
        self.sweep_config()?;
        self.kernel_window()?;
        self.scaling_rhos()?;
        Ok(())
    }

    pub fn picard_checked(&self) -> Result<PicardConfig, ConfigError> {
        let p = self.solver.picard();
        p.validate().map_err(|e| from_core("solver", e))?;
        if !(self.solver.amplitude > 0.0 && self.solver.amplitude.is_finite()) {
            return Err(invalid("solver.amplitude", "must be positive"));
        }
        Ok(p)
    }

    pub fn estimate_ids(&self) -> Result<Vec<EstimateId>, ConfigError> {
        match &self.sweep.estimates {
            None => Ok(EstimateId::ALL.to_vec()),
            Some(ids) if ids.is_empty() => Err(invalid("sweep.estimates", "empty list")),
            Some(ids) => ids
                .iter()
                .map(|s| s.parse::<EstimateId>().map_err(|e| invalid("sweep.estimates", e.to_string())))
                .collect(),
        }
    }

    pub fn estimate_specs(&self) -> Result<Vec<EstimateSpec>, ConfigError> {
        let ids = self.estimate_ids()?;
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let mut spec = EstimateSpec::new(id);
            if self.grid.is_set() {
                spec.grid = self.grid.resolve(spec.grid)?;
            }
            if let Some(seed) = self.ensemble.seed {
                spec.seed = seed;
            }
            if let Some(n) = self.ensemble.samples {
                spec.samples = n;
            }
            if let Some(p) = &self.ensemble.profiles {
                if p.is_empty() {
                    return Err(invalid("ensemble.profiles", "empty list"));
                }
                spec.profiles = p.iter().map(|&[a, b]| Decay::Power { a, b }).collect();
            }
            spec.validate().map_err(|e| match e {
                Error::InvalidParameter { name: "samples", reason } => invalid("ensemble.samples", reason),
                Error::InvalidParameter { name: "profiles" | "decay", reason } => invalid("ensemble.profiles", reason),
                Error::InvalidParameter { name, reason } => invalid(format!("sweep.estimates.{id}.{name}"), reason),
                other => from_core("grid", other),
            })?;
            out.push(spec);
        }
        Ok(out)
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, ConfigError> {
        let mut cfg = SweepConfig { budget: self.sweep.budget, check_tol: self.sweep.check_tol, ..Default::default() };
        if let Some(t) = &self.sweep.t_samples {
            cfg.t_samples = t.clone();
        }
        if cfg.t_samples.is_empty() || cfg.t_samples.iter().any(|t| !t.is_finite() || t.abs() > 1.0) {
            return Err(invalid("sweep.t_samples", "need a nonempty list of times in [-1, 1]"));
        }
        if !(cfg.budget > 0.0) {
            return Err(invalid("sweep.budget", "must be positive"));
        }
        if !(cfg.check_tol > 0.0) {
            return Err(invalid("sweep.check_tol", "must be positive"));
        }
        Ok(cfg)
    }

    pub fn kernel_window(&self) -> Result<((i32, i32), (i32, i32)), ConfigError> {
        let [k0, k1] = self.sweep.k_window;
        let [j0, j1] = self.sweep.j_window;
        if k1 <= k0 {
            return Err(invalid("sweep.k_window", format!("need two or more values, got [{k0}, {k1}]")));
        }
        if j1 <= j0 {
            return Err(invalid("sweep.j_window", format!("need two or more values, got [{j0}, {j1}]")));
        }
        Ok(((k0, k1), (j0, j1)))
    }

    pub fn scaling_rhos(&self) -> Result<Vec<f64>, ConfigError> {
        if self.sweep.rho.len() < 2 {
            return Err(invalid("sweep.rho", "need at least two scaling factors"));
        }
        for &r in &self.sweep.rho {
            kp_core::evolution::ScalingParams::new(r).map_err(|e| invalid("sweep.rho", e.to_string()))?;
        }
        for &[sigma, alpha] in &self.sweep.weighted {
            if !(sigma >= 0.0 && alpha >= 0.0 && sigma.is_finite() && alpha.is_finite()) {
                return Err(invalid("sweep.weighted", format!("need sigma, alpha >= 0, got [{sigma}, {alpha}]")));
            }
        }
        Ok(self.sweep.rho.clone())
    }
}

/// Dotted key path of the table entry that contains byte offset `pos`.
fn key_path(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if offset > pos {
            break;
        }
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().trim_matches('"').to_string();
        }
        offset += line.len();
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

/// Parses `--grid 128x64`.
pub fn parse_grid_override(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let nx = a.trim().parse().map_err(|_| format!("bad Nx in `{s}`"))?;
    let ny = b.trim().parse().map_err(|_| format!("bad Ny in `{s}`"))?;
    Ok((nx, ny))
}
