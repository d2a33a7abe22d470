//! Plain-text trajectory formats.
//!
//! The spectral dump lists, for each time, a header line `# t <time>`
//! followed by one line `m n re im` per nonzero coefficient. The first line
//! records the grid as `# grid <Lx> <Ly> <Nx> <Ny>`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::norms::{SpectralTrajectory, TrajectoryField};
use crate::spectral::{Grid2D, SpectralField};

/// `t,x,y,u` rows.
pub fn trajectory_csv(traj: &TrajectoryField) -> String {
    let g = traj.grid();
    let mut out = String::from("t,x,y,u\n");
    for (t, f) in traj.times().iter().zip(traj.fields()) {
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let _ = writeln!(out, "{t:.16e},{:.16e},{:.16e},{:.16e}", g.x(i), g.y(j), f.at(i, j));
            }
        }
    }
    out
}

pub fn write_trajectory_csv(traj: &TrajectoryField, path: &Path) -> Result<()> {
    std::fs::write(path, trajectory_csv(traj)).map_err(|e| Error::io(path, e))
}

pub fn spectral_dump(traj: &SpectralTrajectory) -> String {
    let g = traj.grid();
    let ny = g.ny();
    let mut out = format!("# grid {:.16e} {:.16e} {} {}\n", g.lx(), g.ly(), g.nx(), ny);
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        let _ = writeln!(out, "# t {t:.16e}");
        for (k, c) in f.coeffs().iter().enumerate() {
            if c.norm() != 0.0 {
                let _ = writeln!(out, "{} {} {:.16e} {:.16e}", g.mode_x(k / ny), g.mode_y(k % ny), c.re, c.im);
            }
        }
    }
    out
}

pub fn write_spectral_dump(traj: &SpectralTrajectory, path: &Path) -> Result<()> {
    std::fs::write(path, spectral_dump(traj)).map_err(|e| Error::io(path, e))
}

/// Parses the output of [`spectral_dump`].
pub fn read_spectral_dump(text: &str) -> Result<SpectralTrajectory> {
    let bad = |line: usize, what: &str| Error::param("spectral dump", format!("line {}: {what}", line + 1));
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| bad(0, "empty input"))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 6 || parts[..2] != ["#", "grid"] {
        return Err(bad(0, "expected `# grid Lx Ly Nx Ny`"));
    }
    let num = |s: &str, l: usize| s.parse::<f64>().map_err(|_| bad(l, "bad number"));
    let int = |s: &str, l: usize| s.parse::<i64>().map_err(|_| bad(l, "bad integer"));
    let grid = Grid2D::new(num(parts[2], 0)?, num(parts[3], 0)?, int(parts[4], 0)? as usize, int(parts[5], 0)? as usize)?;
    let mut times = Vec::new();
    let mut blocks: Vec<Vec<Complex64>> = Vec::new();
    for (l, line) in lines {
        let p: Vec<&str> = line.split_whitespace().collect();
        match p.as_slice() {
            [] => {}
            ["#", "t", t] => {
                times.push(num(t, l)?);
                blocks.push(vec![Complex64::new(0.0, 0.0); grid.len()]);
            }
            [m, n, re, im] => {
                let block = blocks.last_mut().ok_or_else(|| bad(l, "coefficient before `# t`"))?;
                let (i, j) = grid
                    .index_x(int(m, l)?)
                    .zip(grid.index_y(int(n, l)?))
                    .ok_or_else(|| bad(l, "mode outside the grid"))?;
                block[i * grid.ny() + j] = Complex64::new(num(re, l)?, num(im, l)?);
            }
            _ => return Err(bad(l, "unrecognised line")),
        }
    }
    let fields = blocks.into_iter().map(|c| SpectralField::from_coeffs(grid, c)).collect::<Result<_>>()?;
    Ok(SpectralTrajectory { times, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::testing::smooth_field;
    use std::f64::consts::PI;

    #[test]
    fn dump_roundtrip_is_exact() {
        let g = Grid2D::new(PI, 2.0 * PI, 8, 16).unwrap();
        let traj = SpectralTrajectory { times: vec![0.0, 0.125], fields: vec![smooth_field(g, 1), smooth_field(g, 2)] };
        let back = read_spectral_dump(&spectral_dump(&traj)).unwrap();
        assert_eq!(back, traj);
        assert!(read_spectral_dump("# grid 1 1 4 4\n0 0 1 0\n").is_err());
    }

    #[test]
    fn csv_rows() {
        let g = Grid2D::new(PI, PI, 8, 8).unwrap();
        let traj = SpectralTrajectory { times: vec![0.0, 1.0], fields: vec![smooth_field(g, 1); 2] }.physical().unwrap();
        let csv = trajectory_csv(&traj);
        assert_eq!(csv.lines().count(), 1 + 2 * 64);
    }
}
