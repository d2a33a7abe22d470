use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated periodic lattice on `[-Lx, Lx) x [-Ly, Ly)`.
///
/// Samples sit at `x_i = -Lx + i dx` with `dx = 2 Lx / Nx`. Frequencies are
/// `xi_m = pi m / Lx` for `m` in `[-Nx/2, Nx/2)`, stored in FFT order: storage
/// index `i` holds `m = i` for `i < Nx/2` and `m = i - Nx` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid2D {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    #[serde(rename = "Lx")]
    lx: f64,
    #[serde(rename = "Ly")]
    ly: f64,
    #[serde(rename = "Nx")]
    nx: usize,
    #[serde(rename = "Ny")]
    ny: usize,
}

impl TryFrom<GridRepr> for Grid2D {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Grid2D::new(r.lx, r.ly, r.nx, r.ny)
    }
}

impl From<Grid2D> for GridRepr {
    fn from(g: Grid2D) -> Self {
        GridRepr { lx: g.lx, ly: g.ly, nx: g.nx, ny: g.ny }
    }
}

/// Same as [`Grid2D::new`].
pub fn make_grid(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Grid2D> {
    Grid2D::new(lx, ly, nx, ny)
}

fn check_len(field: &'static str, l: f64) -> Result<()> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidGrid { field, reason: format!("must be positive and finite, got {l}") });
    }
    Ok(())
}

fn check_count(field: &'static str, n: usize) -> Result<()> {
    if n % 2 != 0 || n < 8 {
        return Err(Error::InvalidGrid { field, reason: format!("must be even and at least 8, got {n}") });
    }
    Ok(())
}

impl Grid2D {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        check_len("Lx", lx)?;
        check_len("Ly", ly)?;
        check_count("Nx", nx)?;
        check_count("Ny", ny)?;
        Ok(Grid2D { lx, ly, nx, ny })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }
    pub fn area(&self) -> f64 {
        4.0 * self.lx * self.ly
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.dx()
    }
    pub fn y(&self, j: usize) -> f64 {
        -self.ly + j as f64 * self.dy()
    }

    /// Signed mode number of storage index `i` along x.
    pub fn mode_x(&self, i: usize) -> i64 {
        signed_mode(i, self.nx)
    }
    pub fn mode_y(&self, j: usize) -> i64 {
        signed_mode(j, self.ny)
    }

    pub fn xi(&self, i: usize) -> f64 {
        PI * self.mode_x(i) as f64 / self.lx
    }
    pub fn lambda(&self, j: usize) -> f64 {
        PI * self.mode_y(j) as f64 / self.ly
    }
    pub fn xi_spacing(&self) -> f64 {
        PI / self.lx
    }
    pub fn lambda_spacing(&self) -> f64 {
        PI / self.ly
    }

    /// Storage index of mode `m` along x, if it lies on the lattice.
    pub fn index_x(&self, m: i64) -> Option<usize> {
        storage_index(m, self.nx)
    }
    pub fn index_y(&self, n: i64) -> Option<usize> {
        storage_index(n, self.ny)
    }

    pub fn is_nyquist(&self, i: usize, j: usize) -> bool {
        i == self.nx / 2 || j == self.ny / 2
    }

    /// Storage index of the mode `(-m, -n)`.
    pub fn partner(&self, i: usize, j: usize) -> (usize, usize) {
        ((self.nx - i) % self.nx, (self.ny - j) % self.ny)
    }

    pub fn with_counts(&self, nx: usize, ny: usize) -> Result<Self> {
        Grid2D::new(self.lx, self.ly, nx, ny)
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn storage_index(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if m < -half || m >= half {
        return None;
    }
    Some(if m >= 0 { m as usize } else { (m + n as i64) as usize })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_lattice() {
        let g = make_grid(PI, PI, 8, 8).unwrap();
        let mut xs: Vec<f64> = (0..8).map(|i| g.xi(i)).collect();
        xs.sort_by(f64::total_cmp);
        let want: Vec<f64> = (-4..4).map(|m| m as f64).collect();
        for (a, b) in xs.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn spacings() {
        let g = make_grid(2.0 * PI, PI, 16, 8).unwrap();
        assert!((g.xi_spacing() - 0.5).abs() < 1e-15);
        assert!((g.lambda_spacing() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(PI, PI, 7, 8).is_err());
        assert!(make_grid(PI, PI, 6, 8).is_err());
        assert!(make_grid(0.0, PI, 8, 8).is_err());
        assert!(make_grid(PI, -1.0, 8, 8).is_err());
        let msg = make_grid(PI, PI, 9, 8).unwrap_err().to_string();
        assert!(msg.contains("Nx"), "{msg}");
    }

    #[test]
    fn index_roundtrip() {
        let g = make_grid(1.0, 1.0, 16, 8).unwrap();
        for i in 0..16 {
            assert_eq!(g.index_x(g.mode_x(i)), Some(i));
        }
        assert_eq!(g.index_x(8), None);
        assert_eq!(g.index_x(-8), Some(8));
        assert_eq!(g.partner(1, 2), (15, 6));
        assert_eq!(g.partner(0, 0), (0, 0));
    }

    #[test]
    fn serde_uses_symbolic_names() {
        let g = make_grid(1.0, 2.0, 8, 16).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"Lx\""));
        let back: Grid2D = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Grid2D>(r#"{"Lx":1,"Ly":1,"Nx":7,"Ny":8}"#).is_err());
    }
}
