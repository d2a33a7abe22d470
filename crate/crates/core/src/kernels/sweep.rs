//! Lattice sums of kernel suprema over unit cells.
//!
//! For each block, time sample and `y` cell the kernel is evaluated on the
//! `1/8` lattice by a uniform trapezoid rule in `a` and `b` (exact to all
//! orders for the compactly supported bump) with an FFT over `a`, which
//! yields every `x` sample of the cell at once. Each chunk is recomputed with
//! doubled points in both axes; samples that move by more than the tolerance
//! are excluded and counted.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::{block_area, block_box, exponent_delta_alt, ExponentTable};
use crate::error::{Error, Result};
use crate::multipliers::{BumpProfile, DyadicIndex};
use crate::spectral::fft::fft_1d;

/// Samples per unit length on both axes.
const SAMPLES_PER_UNIT: usize = 8;

/// Trapezoid points per axis regardless of the phase.
const MIN_POINTS: f64 = 256.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Times in `[-1, 1]`. The supremum runs over `±t`.
    pub t_samples: Vec<f64>,
    /// `y` cells per side; chosen from the block when absent.
    pub s_max: Option<usize>,
    /// `x` cells per side; chosen from the block when absent.
    pub r_max: Option<usize>,
    /// Work limit per chunk (quadrature terms plus FFT operations).
    pub budget: f64,
    /// Relative change allowed under doubling.
    pub check_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            t_samples: (0..=8).map(|i| i as f64 / 8.0).collect(),
            s_max: None,
            r_max: None,
            budget: 6e7,
            check_tol: 1e-4,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.t_samples.is_empty() {
            return Err(Error::param("t_samples", "empty"));
        }
        if let Some(t) = self.t_samples.iter().find(|t| !t.is_finite() || t.abs() > 1.0) {
            return Err(Error::param("t_samples", format!("{t} is outside [-1, 1]")));
        }
        if self.s_max.is_some_and(|s| s < 8) || self.r_max.is_some_and(|r| r < 8) {
            return Err(Error::param("extents", "below 8"));
        }
        if !(self.budget > 0.0) || !(self.check_tol > 0.0) {
            return Err(Error::param("budget", "budget and check_tol must be positive"));
        }
        Ok(())
    }
}

/// Default extents: the dispersive spread at the largest time plus a decay margin.
pub fn auto_extents(idx: DyadicIndex, t_max: f64) -> (usize, usize) {
    let ([a0, a1], [b0, b1]) = block_box(idx);
    let margin_y = 12.0 / (a0 * (b1 - b0)) + 4.0;
    let s = (2.0 * t_max * b1 + margin_y).ceil().clamp(8.0, 256.0) as usize;
    let r = (t_max * (3.0 * a1 * a1 + b1 * b1) + s as f64 * b1 + x_margin(a0, a1))
        .ceil()
        .clamp(8.0, 4096.0) as usize;
    (s, r)
}

fn x_margin(a0: f64, a1: f64) -> f64 {
    12.0 / (a1 - a0) + 4.0
}

/// Aggregates at one time sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTimeRow {
    pub t: f64,
    pub s_y: f64,
    pub s_x: f64,
    pub max_abs: f64,
    pub resolved_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub idx: DyadicIndex,
    pub exponents: ExponentTable,
    pub delta_alt: f64,
    pub s_max: usize,
    pub r_max: usize,
    pub rows: Vec<KernelTimeRow>,
    /// `sum_s sup |I|` over all time samples.
    pub s_y: f64,
    /// `sum_r sup |I|` over all time samples.
    pub s_x: f64,
    pub ratio_y: f64,
    pub ratio_x: f64,
    /// `sup |I^{±1}|`, when `|t| = 1` is sampled.
    pub sup_unit_time: Option<f64>,
    /// `sup |I^{±1}| / 2^beta`, for blocks with `max(k, j) > 0`.
    pub vdc_ratio: Option<f64>,
    pub resolved_fraction: f64,
    pub unresolved_chunks: usize,
    pub checked_points: usize,
    pub excluded_points: usize,
    /// Largest relative change under doubling among retained samples.
    pub max_check_change: f64,
}

struct ChunkPlan {
    tau: f64,
    cell: usize,
    /// `x` samples run over `-p..=p`.
    p: usize,
    na: usize,
    nb: usize,
    n_fft: usize,
}

struct ChunkOut {
    /// Signed kernel values, `[l][p + offset]`.
    values: Vec<Vec<f64>>,
}

struct Block {
    idx: DyadicIndex,
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
    bump: BumpProfile,
}

impl Block {
    fn new(idx: DyadicIndex) -> Self {
        let ([a0, a1], [b0, b1]) = block_box(idx);
        Block { idx, a0, a1, b0, b1, bump: BumpProfile }
    }

    fn plan(&self, tau: f64, cell: usize, r_max: usize, refine: usize) -> ChunkPlan {
        let (a0, a1, b1) = (self.a0, self.a1, self.b1);
        let y_hi = cell as f64 + 1.0;
        let spread = tau * (3.0 * a1 * a1 + b1 * b1);
        let x_half = (r_max as f64 + 1.0).min(spread + y_hi * b1 + x_margin(a0, a1));
        let cyc_a = (spread + x_half + y_hi * b1) * (a1 - a0) / (2.0 * PI);
        let cyc_b = a1 * (2.0 * tau * b1 + y_hi) * (self.b1 - self.b0) / (2.0 * PI);
        let na_req = (8.0 * cyc_a).ceil().max(MIN_POINTS) as usize * refine;
        let nb = (8.0 * cyc_b).ceil().max(MIN_POINTS) as usize * refine;
        let n_fft = ((2.0 * SAMPLES_PER_UNIT as f64 * PI * na_req as f64 / (a1 - a0)).ceil() as usize)
            .next_power_of_two();
        let da = 2.0 * SAMPLES_PER_UNIT as f64 * PI / n_fft as f64;
        let na = ((a1 - a0) / da).floor() as usize + 1;
        let p = (x_half * SAMPLES_PER_UNIT as f64).ceil() as usize;
        ChunkPlan { tau, cell, p, na, nb, n_fft }
    }

    fn work(plan: &ChunkPlan) -> f64 {
        let ys = (SAMPLES_PER_UNIT + 1) as f64;
        let n = plan.n_fft as f64;
        ys * (plan.na as f64 * plan.nb as f64 + 5.0 * n * n.log2())
    }

    fn eval(&self, plan: &ChunkPlan) -> ChunkOut {
        const NY: usize = SAMPLES_PER_UNIT + 1;
        let (a0, b0) = (self.a0, self.b0);
        let da = 2.0 * SAMPLES_PER_UNIT as f64 * PI / plan.n_fft as f64;
        let db = (self.b1 - b0) / plan.nb as f64;
        let sa = 2f64.powi(-self.idx.k);
        let sb = 2f64.powi(-self.idx.j);
        let bs: Vec<f64> = (0..=plan.nb).map(|m| b0 + m as f64 * db).collect();
        let wb: Vec<f64> = bs.iter().map(|&b| db * self.bump.psi(b * sb)).collect();
        let y0 = plan.cell as f64;
        let tau = plan.tau;
        let step = 1.0 / SAMPLES_PER_UNIT as f64;

        let mut g = vec![vec![Complex64::new(0.0, 0.0); plan.n_fft]; NY];
        for i in 0..plan.na {
            let a = a0 + i as f64 * da;
            let amp = da * a * self.bump.psi(a * sa);
            if amp == 0.0 {
                continue;
            }
            let mut acc = [Complex64::new(0.0, 0.0); NY];
            // e^{i tau a b²}, e^{i y0 a b}, e^{i a b / 8} by recurrences in b,
            // resynchronised every 64 steps.
            let mut quad = Complex64::new(1.0, 0.0);
            let mut quad_step = Complex64::new(1.0, 0.0);
            let quad_step2 = Complex64::from_polar(1.0, 2.0 * tau * a * db * db);
            let mut lin = Complex64::new(1.0, 0.0);
            let lin_step = Complex64::from_polar(1.0, y0 * a * db);
            let mut rot = Complex64::new(1.0, 0.0);
            let rot_step = Complex64::from_polar(1.0, a * step * db);
            for (m, (&b, &w)) in bs.iter().zip(&wb).enumerate() {
                if m % 64 == 0 {
                    quad = Complex64::from_polar(1.0, tau * a * b * b);
                    quad_step = Complex64::from_polar(1.0, tau * a * (2.0 * b * db + db * db));
                    lin = Complex64::from_polar(1.0, y0 * a * b);
                    rot = Complex64::from_polar(1.0, a * step * b);
                }
                if w != 0.0 {
                    let base = quad * w;
                    let mut z = lin;
                    for slot in acc.iter_mut() {
                        *slot += base * z.re;
                        z *= rot;
                    }
                }
                quad *= quad_step;
                quad_step *= quad_step2;
                lin *= lin_step;
                rot *= rot_step;
            }
            let front = Complex64::from_polar(2.0 * amp, tau * a * a * a);
            for l in 0..NY {
                g[l][i] = front * acc[l];
            }
        }

        let n = plan.n_fft;
        let values = g
            .into_iter()
            .map(|mut col| {
                fft_1d(&mut col, FftDirection::Inverse);
                (0..=2 * plan.p)
                    .map(|q| {
                        let p = q as i64 - plan.p as i64;
                        let x = p as f64 * step;
                        let h = col[p.rem_euclid(n as i64) as usize] * Complex64::from_polar(1.0, x * a0);
                        2.0 * h.re
                    })
                    .collect()
            })
            .collect();
        ChunkOut { values }
    }
}

struct ChunkResult {
    t_index: usize,
    cell: usize,
    resolved: bool,
    p: usize,
    /// `|I|` per `x` sample, maximum over the cell's `y` samples; NaN where excluded.
    x_profile: Vec<f64>,
    cell_sup: f64,
    checked: usize,
    excluded: usize,
    max_change: f64,
}

pub fn verify_kernel_bound(
    idx: DyadicIndex,
    t_samples: &[f64],
    extents: Option<(usize, usize)>,
) -> Result<KernelBoundReport> {
    let cfg = SweepConfig {
        t_samples: t_samples.to_vec(),
        s_max: extents.map(|e| e.0),
        r_max: extents.map(|e| e.1),
        ..SweepConfig::default()
    };
    verify_kernel_bound_with(idx, &cfg)
}

pub fn verify_kernel_bound_with(idx: DyadicIndex, cfg: &SweepConfig) -> Result<KernelBoundReport> {
    cfg.validate()?;
    let block = Block::new(idx);
    let t_max = cfg.t_samples.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let (s_auto, r_auto) = auto_extents(idx, t_max);
    let s_max = cfg.s_max.unwrap_or(s_auto);
    let r_max = cfg.r_max.unwrap_or(r_auto);
    let floor = 1e-8 * block_area(idx, 64);

    let jobs: Vec<(usize, usize)> = (0..cfg.t_samples.len())
        .flat_map(|ti| (0..s_max).map(move |s| (ti, s)))
        .collect();
    let results: Vec<ChunkResult> = jobs
        .par_iter()
        .map(|&(ti, cell)| {
            let t = cfg.t_samples[ti];
            let plan = block.plan(t.abs(), cell, r_max, 1);
            if Block::work(&plan) > cfg.budget {
                return ChunkResult {
                    t_index: ti,
                    cell,
                    resolved: false,
                    p: 0,
                    x_profile: Vec::new(),
                    cell_sup: 0.0,
                    checked: 0,
                    excluded: 0,
                    max_change: 0.0,
                };
            }
            let base = block.eval(&plan);
            let fine = block.eval(&block.plan(t.abs(), cell, r_max, 2));
            let mut checked = 0;
            let mut excluded = 0;
            let mut max_change: f64 = 0.0;
            let width = 2 * plan.p + 1;
            let mut x_profile = vec![0.0f64; width];
            let mut cell_sup: f64 = 0.0;
            for (row, row_fine) in base.values.iter().zip(&fine.values) {
                for q in 0..width {
                    let v = row[q].abs();
                    let w = row_fine[q].abs();
                    let change = if v >= floor || w >= floor {
                        checked += 1;
                        (v - w).abs() / w.max(floor)
                    } else {
                        0.0
                    };
                    let qq = if t < 0.0 { width - 1 - q } else { q };
                    if change > cfg.check_tol {
                        excluded += 1;
                        x_profile[qq] = f64::NAN;
                        continue;
                    }
                    max_change = max_change.max(change);
                    if !x_profile[qq].is_nan() {
                        x_profile[qq] = x_profile[qq].max(v);
                    }
                    cell_sup = cell_sup.max(v);
                }
            }
            ChunkResult {
                t_index: ti,
                cell,
                resolved: true,
                p: plan.p,
                x_profile,
                cell_sup,
                checked,
                excluded,
                max_change,
            }
        })
        .collect();

    let ex = ExponentTable::at(idx);
    let width = 2 * r_max * SAMPLES_PER_UNIT + 1;
    let centre = r_max * SAMPLES_PER_UNIT;
    let mut cell_best = vec![0.0f64; s_max];
    let mut x_best = vec![0.0f64; width];
    let mut rows = Vec::with_capacity(cfg.t_samples.len());
    for (ti, &t) in cfg.t_samples.iter().enumerate() {
        let mut x_t = vec![0.0f64; width];
        let mut s_y = 0.0;
        let mut resolved = 0usize;
        let mut max_abs: f64 = 0.0;
        for r in results.iter().filter(|r| r.t_index == ti) {
            if !r.resolved {
                continue;
            }
            resolved += 1;
            s_y += 2.0 * r.cell_sup;
            max_abs = max_abs.max(r.cell_sup);
            cell_best[r.cell] = cell_best[r.cell].max(r.cell_sup);
            for (q, &v) in r.x_profile.iter().enumerate() {
                let pos = q as i64 - r.p as i64 + centre as i64;
                if pos >= 0 && (pos as usize) < width && v.is_finite() {
                    x_t[pos as usize] = x_t[pos as usize].max(v);
                }
            }
        }
        for q in 0..width {
            // the mirrored time sample reflects x
            let m = x_t[q].max(x_t[width - 1 - q]);
            x_best[q] = x_best[q].max(m);
        }
        rows.push(KernelTimeRow {
            t,
            s_y,
            s_x: cell_sums(&x_t, r_max),
            max_abs,
            resolved_fraction: resolved as f64 / s_max as f64,
        });
    }

    let s_y = 2.0 * cell_best.iter().sum::<f64>();
    let s_x = cell_sums(&x_best, r_max);
    let unit: Vec<&KernelTimeRow> = rows.iter().filter(|r| r.t.abs() == 1.0).collect();
    let sup_unit_time = unit
        .iter()
        .filter(|r| r.resolved_fraction > 0.0)
        .map(|r| r.max_abs)
        .reduce(f64::max);
    let vdc_ratio = sup_unit_time
        .filter(|_| idx.k.max(idx.j) > 0)
        .map(|s| s / 2f64.powf(ex.beta));
    let unresolved_chunks = results.iter().filter(|r| !r.resolved).count();
    Ok(KernelBoundReport {
        idx,
        exponents: ex,
        delta_alt: exponent_delta_alt(idx.k, idx.j),
        s_max,
        r_max,
        rows,
        s_y,
        s_x,
        ratio_y: s_y / 2f64.powf(ex.alpha),
        ratio_x: s_x / 2f64.powf(ex.delta),
        sup_unit_time,
        vdc_ratio,
        resolved_fraction: 1.0 - unresolved_chunks as f64 / results.len() as f64,
        unresolved_chunks,
        checked_points: results.iter().map(|r| r.checked).sum(),
        excluded_points: results.iter().map(|r| r.excluded).sum(),
        max_check_change: results.iter().fold(0.0, |m, r| m.max(r.max_change)),
    })
}

/// `sum_r max_{x in [r, r+1]}` over the `1/8` lattice on `[-r_max, r_max]`.
fn cell_sums(profile: &[f64], r_max: usize) -> f64 {
    (0..2 * r_max)
        .map(|c| {
            let lo = c * SAMPLES_PER_UNIT;
            profile[lo..=lo + SAMPLES_PER_UNIT].iter().fold(0.0f64, |m, &v| m.max(v))
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(x, y)`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::param("fit_slope", "need two or more paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("fit_slope", "abscissae coincide"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: my - slope * mx })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSweep {
    pub k_range: (i32, i32),
    pub j_range: (i32, i32),
    pub reports: Vec<KernelBoundReport>,
    /// Slope of `log2 S_y` in `k` along `j = j_range.0`.
    pub slope_k: SlopeFit,
    /// Slope of `log2 S_y` in `j` along `k = k_range.0`.
    pub slope_j: SlopeFit,
    pub max_ratio_y: f64,
    pub max_ratio_x: f64,
    pub max_vdc_ratio: Option<f64>,
    pub unresolved_chunks: usize,
    pub excluded_points: usize,
    pub max_check_change: f64,
}

/// Runs every block of the inclusive window and fits the dyadic slopes.
pub fn kernel_sweep(k_range: (i32, i32), j_range: (i32, i32), cfg: &SweepConfig) -> Result<KernelSweep> {
    if k_range.1 <= k_range.0 || j_range.1 <= j_range.0 {
        return Err(Error::param("window", "each range needs two or more values"));
    }
    let mut reports = Vec::new();
    for k in k_range.0..=k_range.1 {
        for j in j_range.0..=j_range.1 {
            reports.push(verify_kernel_bound_with(DyadicIndex::new(k, j), cfg)?);
        }
    }
    let line = |pick: &dyn Fn(&KernelBoundReport) -> Option<f64>| -> Result<SlopeFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = reports
            .iter()
            .filter_map(|r| pick(r).map(|x| (x, r.s_y.log2())))
            .unzip();
        fit_slope(&xs, &ys)
    };
    let slope_k = line(&|r| (r.idx.j == j_range.0).then_some(r.idx.k as f64))?;
    let slope_j = line(&|r| (r.idx.k == k_range.0).then_some(r.idx.j as f64))?;
    let vdc: Vec<f64> = reports.iter().filter_map(|r| r.vdc_ratio).collect();
    Ok(KernelSweep {
        k_range,
        j_range,
        slope_k,
        slope_j,
        max_ratio_y: reports.iter().fold(0.0, |m, r| m.max(r.ratio_y)),
        max_ratio_x: reports.iter().fold(0.0, |m, r| m.max(r.ratio_x)),
        max_vdc_ratio: (!vdc.is_empty()).then(|| vdc.iter().fold(0.0, |m: f64, &v| m.max(v))),
        unresolved_chunks: reports.iter().map(|r| r.unresolved_chunks).sum(),
        excluded_points: reports.iter().map(|r| r.excluded_points).sum(),
        max_check_change: reports.iter().fold(0.0, |m, r| m.max(r.max_check_change)),
        reports,
    })
}

impl KernelSweep {
    pub const CSV_HEADER: &'static str =
        "k,j,t,S_y,S_x,alpha,delta,ratio_y,ratio_x,resolved_fraction,delta_alt,beta,vdc_ratio";

    /// One row per block and time sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            let e = &r.exponents;
            for row in &r.rows {
                let vdc = if row.t.abs() == 1.0 && r.idx.k.max(r.idx.j) > 0 {
                    format!("{:.16e}", row.max_abs / 2f64.powf(e.beta))
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{},{},{}",
                    r.idx.k,
                    r.idx.j,
                    row.t,
                    row.s_y,
                    row.s_x,
                    e.alpha,
                    e.delta,
                    row.s_y / 2f64.powf(e.alpha),
                    row.s_x / 2f64.powf(e.delta),
                    row.resolved_fraction,
                    r.delta_alt,
                    e.beta,
                    vdc
                );
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
