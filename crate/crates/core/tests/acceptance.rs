//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p kp-core --test acceptance`. Criterion numbers given as
//! arguments restrict the run, e.g. `cargo test -p kp-core --test acceptance -- 1 2 3`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kp_core::evolution::{
    pde_residual, picard_solve, propagate, reference_integrate, rescale_spectral, LinearGroup,
    PicardConfig, ReferenceConfig, ScalingParams,
};
use kp_core::harness::{
    catalog, leibniz_ratio, random_spectrum, run_estimate_check, sweep_and_report, Decay, EstimateId, EstimateSpec,
    Grid1D, SpectrumSpec, Support, SweepSummary,
};
use kp_core::kernels::{
    delta_branches, exponent_alpha, exponent_beta, exponent_delta, fit_slope, kernel_sweep, DeltaBranch, SweepConfig,
};
use kp_core::multipliers::{abs_weight_y, apply_chain, FracDerivSpec, Symbol};
use kp_core::norms::z0_norm;
use kp_core::spectral::{
    apply_multiplier, dispersion_phi, forward_transform, inverse_transform, DispersionSign, Grid2D, PhysicalField,
    SpectralField,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn noise(grid: Grid2D, seed: u64) -> PhysicalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    PhysicalField::new(grid, values).unwrap()
}

fn c1_transforms() -> Outcome {
    let mut worst = [0.0_f64; 4];
    for n in [64, 128] {
        let grid = Grid2D::new(4.0 * PI, 4.0 * PI, n, n).unwrap();
        let group = LinearGroup::new(grid, DispersionSign::KpI);
        for seed in 0..4 {
            let u = noise(grid, seed);
            let f = forward_transform(&u);
            worst[0] = worst[0].max(rel(f.l2_norm(), u.l2_norm()));
            let back = inverse_transform(&f).unwrap();
            worst[1] = worst[1].max(back.sub(&u).unwrap().l2_norm() / u.l2_norm());
            let f = f.without_nyquist();
            for (t, s) in [(0.3, 0.7), (-0.6, 0.45), (0.5, -0.9)] {
                worst[2] = worst[2].max(rel(group.apply(&f, t).l2_norm(), f.l2_norm()));
                let two = group.apply(&group.apply(&f, s), t);
                let one = group.apply(&f, t + s);
                worst[3] = worst[3].max(two.sub(&one).unwrap().l2_norm() / f.l2_norm());
            }
        }
    }
    let pass = worst.iter().all(|&w| w < 1e-12);
    outcome(
        pass,
        format!(
            "parseval {:.1e}, roundtrip {:.1e}, unitarity {:.1e}, group law {:.1e} (tol 1e-12)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c2_single_mode() -> Outcome {
    let grid = Grid2D::new(PI, PI, 32, 32).unwrap();
    let u0 = PhysicalField::from_fn(grid, |x, y| (x + y).cos());
    let f0 = forward_transform(&u0);
    let phase = dispersion_phi(1.0, 1.0, DispersionSign::KpI);
    let mut err = 0.0_f64;
    for t in [0.1, 1.0] {
        let u = inverse_transform(&propagate(&f0, t, DispersionSign::KpI).unwrap()).unwrap();
        let exact = PhysicalField::from_fn(grid, |x, y| (x + y + phase * t).cos());
        err = err.max(u.sub(&exact).unwrap().max_abs());
    }
    outcome(phase == 2.0 && err < 1e-10, format!("phi(1,1) = {phase}, max error {err:.1e} (tol 1e-10)"))
}

fn c3_exponents() -> Outcome {
    let worked = [
        exponent_alpha(2, 1) == 6.0,
        exponent_delta(0, 3) == 6.0,
        exponent_delta(-2, -3) == -9.0,
        exponent_beta(2, 1) == 2.0,
        exponent_beta(1, 2) == 1.5,
    ];
    let mut mismatches = 0;
    let mut hit = [false; 3];
    for k in -5..=5 {
        for j in -5..=5 {
            let (kf, jf) = (k as f64, j as f64);
            let alpha = if k >= 0 { 2.5 * kf + jf } else { jf };
            let beta = if k >= j { 0.5 * kf + jf } else { 1.5 * kf };
            let delta = if k >= 0 && k >= j {
                2.5 * kf + jf
            } else if (j >= k && k >= 0) || (k < 0 && k >= 2 * j) {
                1.5 * kf + 2.0 * jf
            } else {
                2.0 * kf + jf
            };
            let branches = delta_branches(k, j);
            for b in &branches {
                hit[match b {
                    DeltaBranch::High => 0,
                    DeltaBranch::Mixed => 1,
                    DeltaBranch::Low => 2,
                }] = true;
            }
            if branches.is_empty()
                || exponent_alpha(k, j) != alpha
                || exponent_beta(k, j) != beta
                || exponent_delta(k, j) != delta
            {
                mismatches += 1;
            }
        }
    }
    let pass = worked.iter().all(|&w| w) && mismatches == 0 && hit.iter().all(|&h| h);
    outcome(
        pass,
        format!(
            "worked values {}/5, table mismatches {mismatches}/121, delta branches hit {}/3",
            worked.iter().filter(|&&w| w).count(),
            hit.iter().filter(|&&h| h).count()
        ),
    )
}

fn c4_kernel_sweep() -> Outcome {
    match kernel_sweep((0, 3), (0, 3), &SweepConfig::default()) {
        Ok(s) => {
            let sk = s.slope_k.slope;
            let sj = s.slope_j.slope;
            let pass = (sk - 2.5).abs() <= 0.5
                && (sj - 1.0).abs() <= 0.5
                && s.excluded_points == 0
                && s.max_check_change < 1e-4;
            outcome(
                pass,
                format!(
                    "slope_k {sk:.3} (target 2.5 +- 0.5), slope_j {sj:.3} (target 1 +- 0.5), excluded {}, max doubling change {:.1e} (tol 1e-4)",
                    s.excluded_points, s.max_check_change
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn c5_scaling() -> Outcome {
    let grid = Grid2D::new(2.0 * PI, 2.0 * PI, 64, 64).unwrap();
    let spec = SpectrumSpec { band: Some([12, 12]), ..SpectrumSpec::new(Decay::Power { a: 2.0, b: 2.0 }, Support::Full, 7) };
    let f = random_spectrum(&spec, &grid).unwrap();
    let rhos: Vec<f64> = (0..=4).map(|m| 2f64.powi(-m)).collect();
    let xs: Vec<f64> = rhos.iter().map(|r| r.log2()).collect();
    let slope = |norm: &dyn Fn(&SpectralField) -> f64| -> f64 {
        let ys: Vec<f64> = rhos.iter().map(|&r| norm(&rescale_spectral(&f, r).unwrap()).log2()).collect();
        fit_slope(&xs, &ys).unwrap().slope
    };
    let chain_norm = |chain: Vec<Symbol>| move |g: &SpectralField| apply_chain(g, &chain).unwrap().l2_norm();

    let mut exact_dev = (slope(&|g| g.l2_norm()) - ScalingParams::l2_exponent()).abs();
    for sigma in [0.5, 1.0, 2.0] {
        let s = slope(&chain_norm(vec![Symbol::Deriv(FracDerivSpec::dx(sigma))]));
        exact_dev = exact_dev.max((s - ScalingParams::dx_exponent(sigma)).abs());
    }
    for gamma in [0.5, 1.0] {
        let s = slope(&chain_norm(vec![Symbol::Deriv(FracDerivSpec::dy(gamma))]));
        exact_dev = exact_dev.max((s - ScalingParams::dy_exponent(gamma)).abs());
    }

    let mut weighted_dev = 0.0_f64;
    for (sigma, alpha) in [(1.0, 0.25), (2.0, 0.5)] {
        let norm = move |g: &SpectralField| {
            let d = apply_chain(g, &[Symbol::Deriv(FracDerivSpec::dx(sigma))]).unwrap();
            abs_weight_y(&inverse_transform(&d).unwrap(), alpha).unwrap().l2_norm()
        };
        let target = ScalingParams::weighted_dx_exponent(sigma, alpha);
        weighted_dev = weighted_dev.max(rel(slope(&norm), target));
    }
    let pass = exact_dev <= 1e-10 && weighted_dev <= 0.02;
    outcome(
        pass,
        format!("max slope deviation {exact_dev:.1e} (tol 1e-10), weighted relative deviation {weighted_dev:.1e} (tol 2%)"),
    )
}

fn c6_catalog() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let specs = catalog();
    if let Err(e) = sweep_and_report(&specs, dir.path()) {
        return outcome(false, format!("error: {e}"));
    }
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let summary: SweepSummary = serde_json::from_str(&text).unwrap();
    let finite = summary.estimates.iter().all(|e| e.max_ratio.is_finite() && e.max_ratio_fine.is_finite());
    let worst = summary.estimates.iter().map(|e| e.growth.abs()).fold(0.0, f64::max);
    let failing: Vec<String> = summary.estimates.iter().filter(|e| !e.pass).map(|e| e.id.to_string()).collect();
    let pass = summary.all_pass && finite && worst < 0.2 && summary.estimates.len() == specs.len();
    outcome(
        pass,
        format!(
            "{} entries, all_pass {}, finite {finite}, max |growth| {:.1}% (tol 20%){}",
            summary.estimates.len(),
            summary.all_pass,
            100.0 * worst,
            if failing.is_empty() { String::new() } else { format!(", failing: {}", failing.join(" ")) }
        ),
    )
}

fn small_data() -> PhysicalField {
    let grid = Grid2D::new(4.0 * PI, 4.0 * PI, 64, 64).unwrap();
    let f = forward_transform(&PhysicalField::from_fn(grid, |x, y| -x * (-(x * x + y * y) / 4.5).exp()));
    let f = apply_multiplier(&f, |xi, _| Complex64::new(if xi == 0.0 { 0.0 } else { 1.0 }, 0.0)).unwrap();
    let u = inverse_transform(&f).unwrap();
    let z = z0_norm(&u, 0.05).unwrap().value;
    u.scale(1e-3 / z)
}

fn c7_cross_validation() -> Outcome {
    let u0 = small_data();
    let cfg = PicardConfig::default();
    let sol = match picard_solve(&u0, &cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("picard: {e}")),
    };
    let rcfg = ReferenceConfig { samples: cfg.substeps, ..Default::default() };
    let reference = match reference_integrate(&u0, &rcfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("reference: {e}")),
    };
    let n0 = reference.fields[0].l2_norm();
    let drift = reference.fields.iter().map(|f| rel(f.l2_norm(), n0)).fold(0.0, f64::max);
    let diff = sol
        .trajectory
        .fields
        .iter()
        .zip(&reference.fields)
        .map(|(a, b)| a.sub(b).unwrap().l2_norm() / b.l2_norm())
        .fold(0.0, f64::max);
    let residual = pde_residual(&sol.trajectory, cfg.sign, cfg.beta, cfg.nonlinearity).unwrap();
    let ratio = sol.report.max_ratio.unwrap_or(0.0);
    let pass = sol.report.converged
        && sol.report.contraction_observed
        && ratio < 1.0
        && residual < 1e-4
        && drift < 1e-6
        && diff < 1e-4;
    outcome(
        pass,
        format!(
            "{} iterations, contraction ratio {ratio:.1e}, residual {residual:.1e} (tol 1e-4), drift {drift:.1e} (tol 1e-6), difference {diff:.1e} (tol 1e-4)",
            sol.report.iterations
        ),
    )
}

fn c8_linear() -> Outcome {
    let u0 = small_data().scale(1e3);
    let cfg = PicardConfig { beta: 0.0, ..Default::default() };
    let sol = picard_solve(&u0, &cfg).unwrap();
    let f0 = forward_transform(&u0);
    let err = sol
        .trajectory
        .times
        .iter()
        .zip(&sol.trajectory.fields)
        .map(|(&t, u)| {
            let exact = propagate(&f0, t, DispersionSign::KpI).unwrap();
            u.sub(&exact).unwrap().l2_norm() / exact.l2_norm()
        })
        .fold(0.0, f64::max);
    let pass = sol.report.iterations == 1 && err <= 1e-12;
    outcome(pass, format!("{} iteration(s), max error {err:.1e} (tol 1e-12)", sol.report.iterations))
}

fn c9_appendix() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for id in [EstimateId::FracLeibniz1d, EstimateId::WeightCommutator1d] {
        match run_estimate_check(&EstimateSpec::new(id)) {
            Ok(r) => {
                pass &= r.pass;
                lines.push(format!("{id} max ratio {:.3} growth {:.1}%", r.max_ratio, 100.0 * r.growth));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("{id} error: {e}"));
            }
        }
    }
    let grid = Grid1D::new(8.0, 128).unwrap();
    let mut zero = 0.0_f64;
    for seed in 0..8 {
        let f = grid.random(31, 2.0, seed).unwrap();
        let g = vec![1.0 + seed as f64; grid.n];
        zero = zero.max(leibniz_ratio(&grid, &f, &g, 0.5).value());
    }
    pass &= zero < 1e-13;
    lines.push(format!("constant-g ratio {zero:.1e} (tol 1e-13)"));
    outcome(pass, lines.join(", "))
}

type Check = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let checks: [Check; 9] = [
        (1, "transforms and unitarity", Duration::from_secs(10), c1_transforms),
        (2, "single-mode dispersion", Duration::MAX, c2_single_mode),
        (3, "exponent tables", Duration::from_secs(1), c3_exponents),
        (4, "kernel-bound sweep", Duration::from_secs(600), c4_kernel_sweep),
        (5, "scaling exponents", Duration::from_secs(30), c5_scaling),
        (6, "estimate stability sweep", Duration::from_secs(1800), c6_catalog),
        (7, "solver cross-validation", Duration::from_secs(300), c7_cross_validation),
        (8, "linear degeneration", Duration::MAX, c8_linear),
        (9, "appendix checks", Duration::from_secs(60), c9_appendix),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (n, name, limit, run) in checks {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        let budget = if limit == Duration::MAX { String::new() } else { format!(" / {}s", limit.as_secs()) };
        println!(
            "criterion {n}: {} {name}: {}; {:.2}s{budget}",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
