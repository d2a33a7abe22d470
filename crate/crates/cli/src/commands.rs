//! Subcommand bodies. Each writes its artifacts under the output directory and
//! refreshes `index.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use kp_core::evolution::{
    pde_residual, picard_solve, reference_integrate, rescale_spectral, write_spectral_dump, write_trajectory_csv,
    ReferenceConfig, ScalingParams,
};
use kp_core::harness::{random_spectrum, sweep_and_report, Decay, SpectrumSpec, Support};
use kp_core::kernels::{fit_slope, kernel_sweep, SlopeFit};
use kp_core::multipliers::{abs_weight_y, apply_chain, FracDerivSpec, Symbol};
use kp_core::norms::z0_norm;
use kp_core::spectral::{forward_transform, inverse_transform};
use kp_core::{Error, Grid2D, PhysicalField, SpectralField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{from_core, solve_base_grid, ConfigError, Format, InitialData, RunConfig};
use crate::plot;

/// Failure modes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Divergence { iterates: usize },
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence { .. } => 3,
            CliError::Other(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Divergence { iterates } => write!(f, "numerical divergence after {iterates} iterates"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { history } => CliError::Divergence { iterates: history.len() },
            Error::Integrator(_) => CliError::Divergence { iterates: 0 },
            other => CliError::Other(other.into()),
        }
    }
}

pub type CmdResult = Result<bool, CliError>;

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn initial_data(cfg: &RunConfig, grid: Grid2D) -> Result<PhysicalField, CliError> {
    let f = match cfg.solver.initial {
        InitialData::Bump => forward_transform(&PhysicalField::from_fn(grid, |x, y| -x * (-(x * x + y * y) / 4.5).exp())),
        InitialData::Random => {
            let [a, b] = cfg.ensemble.profiles.as_ref().and_then(|p| p.first().copied()).unwrap_or([2.0, 2.0]);
            let spec = SpectrumSpec::new(Decay::Power { a, b }, Support::Full, cfg.ensemble.seed.unwrap_or(0));
            random_spectrum(&spec, &grid).map_err(|e| from_core("ensemble", e))?
        }
    };
    let u = inverse_transform(&apply_chain(&f, &[Symbol::NonZeroX])?)?;
    let z = z0_norm(&u, cfg.solver.epsilon)?.value;
    if !(z > 0.0) {
        return Err(ConfigError { path: "solver.initial".into(), reason: "initial data vanishes on this grid".into() }.into());
    }
    Ok(u.scale(cfg.solver.amplitude / z))
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> Result<f64, CliError> {
    Ok(a.sub(b)?.l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE))
}

/// Picard solve, optional reference integration, exports and plots.
pub fn solve(cfg: &RunConfig, out: &Path) -> CmdResult {
    let picard = cfg.picard_checked()?;
    let grid = cfg.grid.resolve(solve_base_grid())?;
    let u0 = initial_data(cfg, grid)?;
    prepare(out)?;
    let sol = match picard_solve(&u0, &picard) {
        Ok(s) => s,
        Err(Error::Divergence { history }) => {
            write_json(&out.join("divergence.json"), &json!({ "history": history }))?;
            for r in &history {
                eprintln!("iterate {}: diff {:.3e}, ratio {:?}", r.iter, r.diff, r.ratio);
            }
            return Err(CliError::Divergence { iterates: history.len() });
        }
        Err(e) => return Err(e.into()),
    };
    let traj = &sol.trajectory;
    let residual = pde_residual(traj, picard.sign, picard.beta, picard.nonlinearity)?;

    let reference = if cfg.solver.reference {
        let rc = ReferenceConfig {
            t_final: picard.t_final,
            dt: None,
            sign: picard.sign,
            beta: picard.beta,
            nonlinearity: picard.nonlinearity,
            samples: picard.substeps,
        };
        Some(reference_integrate(&u0, &rc)?)
    } else {
        None
    };

    let n0 = traj.fields[0].l2_norm();
    let mut series = String::from("t,l2,l2_change,l2_reference,reference_drift,difference\n");
    let (mut max_drift, mut max_diff) = (0.0_f64, 0.0_f64);
    for (n, (t, u)) in traj.times.iter().zip(&traj.fields).enumerate() {
        let l2 = u.l2_norm();
        let (l2r, drift, diff) = match &reference {
            Some(r) => {
                let l2r = r.fields[n].l2_norm();
                let drift = (l2r - r.fields[0].l2_norm()).abs() / r.fields[0].l2_norm();
                let diff = rel_diff(u, &r.fields[n])?;
                max_drift = max_drift.max(drift);
                max_diff = max_diff.max(diff);
                (format!("{l2r:.16e}"), format!("{drift:.16e}"), format!("{diff:.16e}"))
            }
            None => Default::default(),
        };
        let _ = writeln!(series, "{t:.16e},{l2:.16e},{:.16e},{l2r},{drift},{diff}", (l2 - n0).abs() / n0);
    }
    write_text(&out.join("timeseries.csv"), &series)?;

    let report = &sol.report;
    let pass = report.converged && report.contraction_observed;
    write_json(
        &out.join("solve.json"),
        &json!({
            "grid": { "Lx": grid.lx(), "Ly": grid.ly(), "Nx": grid.nx(), "Ny": grid.ny() },
            "solver": picard,
            "initial": cfg.solver.initial,
            "amplitude": cfg.solver.amplitude,
            "report": report,
            "residual": residual,
            "reference": reference.as_ref().map(|_| json!({ "max_drift": max_drift, "max_difference": max_diff })),
            "pass": pass,
        }),
    )?;

    if cfg.output.wants(Format::Csv) {
        write_trajectory_csv(&traj.physical()?, &out.join("trajectory.csv"))?;
    }
    if cfg.output.wants(Format::Spectral) {
        write_spectral_dump(traj, &out.join("trajectory.spec"))?;
    }
    if cfg.output.wants(Format::Png) {
        let last = traj.fields.len() - 1;
        for (label, n) in [("start", 0), ("middle", last / 2), ("end", last)] {
            plot::field_png(&inverse_transform(&traj.fields[n])?, &out.join(format!("u_{label}.png")))?;
        }
    }
    println!(
        "solve: {} iterates, converged {}, max contraction ratio {}, residual {residual:.3e}{}",
        report.iterations,
        report.converged,
        report.max_ratio.map_or("n/a".to_string(), |r| format!("{r:.3e}")),
        reference.map_or(String::new(), |_| format!(", reference drift {max_drift:.3e}, difference {max_diff:.3e}"))
    );
    refresh_index(out)?;
    Ok(pass)
}

/// Runs the configured catalog entries on both grids.
pub fn check_estimates(cfg: &RunConfig, out: &Path) -> CmdResult {
    let specs = cfg.estimate_specs()?;
    prepare(out)?;
    let (reports, summary) = sweep_and_report(&specs, out)?;
    if !cfg.output.wants(Format::Csv) {
        for r in &reports {
            let _ = fs::remove_file(out.join(format!("{}.csv", r.id)));
        }
    }
    if cfg.output.wants(Format::Png) {
        for r in &reports {
            let ratios: Vec<f64> = r.samples.iter().map(|s| s.ratio).collect();
            plot::histogram_png(&ratios, 20, &out.join(format!("{}_ratios.png", r.id)))?;
        }
    }
    for e in &summary.estimates {
        println!(
            "{:<26} {} max ratio {:.6e} -> {:.6e}, growth {:.2}%",
            e.id.to_string(),
            if e.pass { "pass" } else { "FAIL" },
            e.max_ratio,
            e.max_ratio_fine,
            100.0 * e.growth
        );
    }
    refresh_index(out)?;
    Ok(summary.all_pass)
}

#[derive(Serialize)]
struct KernelSummary {
    k_window: (i32, i32),
    j_window: (i32, i32),
    slope_k: SlopeFit,
    slope_j: SlopeFit,
    slope_k_target: f64,
    slope_j_target: f64,
    slope_tolerance: f64,
    max_ratio_y: f64,
    max_ratio_x: f64,
    max_vdc_ratio: Option<f64>,
    unresolved_chunks: usize,
    excluded_points: usize,
    max_check_change: f64,
    check_tol: f64,
    blocks: Vec<Value>,
    slope_k_pass: bool,
    slope_j_pass: bool,
    converged: bool,
    pass: bool,
}

/// Dyadic kernel sweep over the configured window.
pub fn kernel_sweep_cmd(cfg: &RunConfig, out: &Path) -> CmdResult {
    let (kw, jw) = cfg.kernel_window()?;
    let sc = cfg.sweep_config()?;
    prepare(out)?;
    let sweep = kernel_sweep(kw, jw, &sc)?;
    if cfg.output.wants(Format::Csv) {
        sweep.write_csv(&out.join("kernel_sweep.csv"))?;
    }
    let blocks = sweep
        .reports
        .iter()
        .map(|r| {
            json!({
                "k": r.idx.k, "j": r.idx.j, "S_y": r.s_y, "S_x": r.s_x,
                "alpha": r.exponents.alpha, "delta": r.exponents.delta, "beta": r.exponents.beta,
                "ratio_y": r.ratio_y, "ratio_x": r.ratio_x, "vdc_ratio": r.vdc_ratio,
                "resolved_fraction": r.resolved_fraction, "excluded_points": r.excluded_points,
            })
        })
        .collect();
    let tol = 0.5;
    let slope_k_pass = (sweep.slope_k.slope - 2.5).abs() <= tol;
    let slope_j_pass = (sweep.slope_j.slope - 1.0).abs() <= tol;
    let converged = sweep.excluded_points == 0 && sweep.max_check_change < sc.check_tol;
    let summary = KernelSummary {
        k_window: kw,
        j_window: jw,
        slope_k: sweep.slope_k,
        slope_j: sweep.slope_j,
        slope_k_target: 2.5,
        slope_j_target: 1.0,
        slope_tolerance: tol,
        max_ratio_y: sweep.max_ratio_y,
        max_ratio_x: sweep.max_ratio_x,
        max_vdc_ratio: sweep.max_vdc_ratio,
        unresolved_chunks: sweep.unresolved_chunks,
        excluded_points: sweep.excluded_points,
        max_check_change: sweep.max_check_change,
        check_tol: sc.check_tol,
        blocks,
        slope_k_pass,
        slope_j_pass,
        converged,
        pass: slope_k_pass && slope_j_pass && converged,
    };
    write_json(&out.join("kernel_sweep.json"), &summary)?;
    println!(
        "kernel-sweep: slope_k {:.4} (target 2.5), slope_j {:.4} (target 1), excluded {}, unresolved chunks {}, max doubling change {:.2e}",
        sweep.slope_k.slope, sweep.slope_j.slope, sweep.excluded_points, sweep.unresolved_chunks, sweep.max_check_change
    );
    refresh_index(out)?;
    Ok(summary.pass)
}

#[derive(Serialize)]
struct ScalingEntry {
    norm: String,
    expected: f64,
    slope: f64,
    deviation: f64,
    tolerance: f64,
    values: Vec<f64>,
    pass: bool,
}

pub fn scaling_base_grid() -> Grid2D {
    Grid2D::new(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 64, 64).expect("valid grid")
}

/// Fitted scaling exponents of the L², derivative and weighted norms.
pub fn scaling(cfg: &RunConfig, out: &Path) -> CmdResult {
    let rhos = cfg.scaling_rhos()?;
    let grid = cfg.grid.resolve(scaling_base_grid())?;
    let [a, b] = cfg.ensemble.profiles.as_ref().and_then(|p| p.first().copied()).unwrap_or([2.0, 2.0]);
    let band = [(grid.nx() / 4) as i64, (grid.ny() / 4) as i64];
    let spec = SpectrumSpec {
        band: Some(band),
        ..SpectrumSpec::new(Decay::Power { a, b }, Support::Full, cfg.ensemble.seed.unwrap_or(0))
    };
    let f = random_spectrum(&spec, &grid).map_err(|e| from_core("ensemble", e))?;
    prepare(out)?;

    let mut ops: Vec<(String, f64, f64, Vec<Symbol>, Option<f64>)> =
        vec![("L2".into(), ScalingParams::l2_exponent(), 1e-10, vec![], None)];
    for sigma in [0.5, 1.0, 2.0] {
        ops.push((format!("Dx^{sigma}"), ScalingParams::dx_exponent(sigma), 1e-10, vec![Symbol::Deriv(FracDerivSpec::dx(sigma))], None));
    }
    for gamma in [0.5, 1.0] {
        ops.push((format!("Dy^{gamma}"), ScalingParams::dy_exponent(gamma), 1e-10, vec![Symbol::Deriv(FracDerivSpec::dy(gamma))], None));
    }
    for &[sigma, alpha] in &cfg.sweep.weighted {
        ops.push((
            format!("|y|^{alpha} Dx^{sigma}"),
            ScalingParams::weighted_dx_exponent(sigma, alpha),
            0.02,
            vec![Symbol::Deriv(FracDerivSpec::dx(sigma))],
            Some(alpha),
        ));
    }

    let xs: Vec<f64> = rhos.iter().map(|r| r.log2()).collect();
    let mut csv = String::from("norm,rho,value\n");
    let mut entries = Vec::new();
    for (name, expected, tol, chain, weight) in ops {
        let mut values = Vec::with_capacity(rhos.len());
        for &rho in &rhos {
            let g = apply_chain(&rescale_spectral(&f, rho)?, &chain)?;
            let v = match weight {
                None => g.l2_norm(),
                Some(alpha) => abs_weight_y(&inverse_transform(&g)?, alpha)?.l2_norm(),
            };
            let _ = writeln!(csv, "{name},{rho:.16e},{v:.16e}");
            values.push(v);
        }
        let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
        let slope = fit_slope(&xs, &ys)?.slope;
        // relative for the weighted norms, absolute near zero
        let scale = if weight.is_some() { expected.abs().max(1.0) } else { 1.0 };
        let deviation = (slope - expected).abs() / scale;
        entries.push(ScalingEntry { norm: name, expected, slope, deviation, tolerance: tol, values, pass: deviation <= tol });
    }
    if cfg.output.wants(Format::Csv) {
        write_text(&out.join("scaling.csv"), &csv)?;
    }
    let pass = entries.iter().all(|e| e.pass);
    for e in &entries {
        println!("{:<18} slope {:.12} expected {:.4} {}", e.norm, e.slope, e.expected, if e.pass { "pass" } else { "FAIL" });
    }
    write_json(&out.join("scaling.json"), &json!({ "rho": rhos, "entries": entries, "pass": pass }))?;
    refresh_index(out)?;
    Ok(pass)
}

const SUMMARIES: [(&str, &str, &str); 4] = [
    ("solve", "solve.json", "pass"),
    ("estimates", "summary.json", "all_pass"),
    ("kernel-sweep", "kernel_sweep.json", "pass"),
    ("scaling", "scaling.json", "pass"),
];

/// Merges whichever summaries exist in `out` into `index.json`.
pub fn refresh_index(out: &Path) -> anyhow::Result<Option<bool>> {
    let mut sections = serde_json::Map::new();
    for (name, file, flag) in SUMMARIES {
        let path = out.join(file);
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let pass = v.get(flag).and_then(Value::as_bool).unwrap_or(false);
        sections.insert(name.to_string(), json!({ "file": file, "pass": pass }));
    }
    if sections.is_empty() {
        return Ok(None);
    }
    let all = sections.values().all(|s| s["pass"] == Value::Bool(true));
    write_json(&out.join("index.json"), &json!({ "sections": sections, "all_pass": all }))?;
    Ok(Some(all))
}

/// Merges the summaries already present in `out`.
pub fn report(out: &Path) -> CmdResult {
    match refresh_index(out)? {
        None => Err(ConfigError {
            path: "output.directory".into(),
            reason: format!("no summaries found in {}", out.display()),
        }
        .into()),
        Some(all) => {
            let text = fs::read_to_string(out.join("index.json")).context("reading index.json")?;
            print!("{text}");
            Ok(all)
        }
    }
}
