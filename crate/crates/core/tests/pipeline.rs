use std::f64::consts::PI;

use kp_core::evolution::{
    pde_residual, picard_solve, read_spectral_dump, reference_integrate, write_spectral_dump, write_trajectory_csv,
    Nonlinearity, PicardConfig, ReferenceConfig,
};
use kp_core::harness::{sweep_and_report, EstimateId, EstimateSpec, SweepSummary};
use kp_core::multipliers::{apply_chain, Symbol};
use kp_core::spectral::{forward_transform, inverse_transform, DispersionSign, Grid2D, PhysicalField};

fn small_data(n: usize, amp: f64) -> PhysicalField {
    let g = Grid2D::new(4.0 * PI, 4.0 * PI, n, n).unwrap();
    let f = forward_transform(&PhysicalField::from_fn(g, |x, y| -x * (-(x * x + y * y) / 4.5).exp()));
    inverse_transform(&apply_chain(&f, &[Symbol::NonZeroX]).unwrap()).unwrap().scale(amp)
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let specs: Vec<EstimateSpec> = [EstimateId::Scaling, EstimateId::FracLeibniz1d]
        .into_iter()
        .map(|id| EstimateSpec { samples: 4, ..EstimateSpec::new(id) })
        .collect();
    let (reports, summary) = sweep_and_report(&specs, dir.path()).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        let csv = std::fs::read_to_string(dir.path().join(format!("{}.csv", r.id))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("sample,seed,grid,lhs,rhs,ratio"));
        assert_eq!(lines.count(), 2 * r.samples.len());
    }
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let back: SweepSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, summary);
    assert!(summary.all_pass);
}

#[test]
fn spectral_dump_roundtrips_through_a_file() {
    let u0 = small_data(16, 0.1);
    let cfg = PicardConfig { substeps: 8, ..Default::default() };
    let sol = picard_solve(&u0, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.spec");
    write_spectral_dump(&sol.trajectory, &path).unwrap();
    let back = read_spectral_dump(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.times, sol.trajectory.times);
    for (a, b) in back.fields.iter().zip(&sol.trajectory.fields) {
        assert_eq!(a.coeffs(), b.coeffs());
    }
    let csv = dir.path().join("u.csv");
    write_trajectory_csv(&sol.trajectory.physical().unwrap(), &csv).unwrap();
    let rows = std::fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(rows, 1 + 9 * 16 * 16);
}

#[test]
fn picard_agrees_with_reference() {
    let u0 = small_data(32, 1e-2);
    let cfg = PicardConfig { substeps: 16, ..Default::default() };
    let sol = picard_solve(&u0, &cfg).unwrap();
    assert!(sol.report.converged && sol.report.contraction_observed);
    let r = reference_integrate(&u0, &ReferenceConfig { samples: 16, ..Default::default() }).unwrap();
    for (a, b) in sol.trajectory.fields.iter().zip(&r.fields) {
        assert!(a.sub(b).unwrap().l2_norm() <= 1e-6 * b.l2_norm());
    }
    let res = pde_residual(&sol.trajectory, DispersionSign::KpI, 1.0, Nonlinearity::KpQuadratic).unwrap();
    assert!(res < 1e-4, "{res}");
}
