use num_complex::Complex64;
use rustfft::FftDirection;

use super::fft::fft_2d;
use super::grid::Grid2D;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real samples of `u(x, y)` on the spatial lattice, row-major with `i` along x.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical field"));
        }
        Ok(PhysicalField { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        PhysicalField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.ny() {
                values.push(f(x, grid.y(j)));
            }
        }
        PhysicalField { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny() + j]
    }

    /// `sqrt(dx dy sum f²)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s * self.grid.dx() * self.grid.dy()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PhysicalField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(PhysicalField { grid: self.grid, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }
}

/// Fourier-series coefficients on the frequency lattice, FFT-ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid2D) -> Self {
        SpectralField { grid, coeffs: vec![ZERO; grid.len()], real: true }
    }

    /// Wraps raw coefficients; the reality flag is set from a Hermitian-symmetry test.
    pub fn from_coeffs(grid: Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("spectral coefficients"));
        }
        let real = is_hermitian(&grid, &coeffs);
        Ok(SpectralField { grid, coeffs, real })
    }

    pub(crate) fn from_raw(grid: Grid2D, coeffs: Vec<Complex64>, real: bool) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs, real }
    }

    /// Real field `c e^{i(xi_m x + lambda_n y)} + conj(c) e^{-i(...)}`.
    pub fn real_mode(grid: Grid2D, m: i64, n: i64, c: Complex64) -> Result<Self> {
        let (i, j) = match (grid.index_x(m), grid.index_y(n)) {
            (Some(i), Some(j)) if !grid.is_nyquist(i, j) => (i, j),
            _ => return Err(Error::Unrepresentable { xi: m as f64, lambda: n as f64 }),
        };
        let mut coeffs = vec![ZERO; grid.len()];
        let (pi, pj) = grid.partner(i, j);
        if (pi, pj) == (i, j) {
            coeffs[i * grid.ny() + j] = Complex64::new(2.0 * c.re, 0.0);
        } else {
            coeffs[i * grid.ny() + j] = c;
            coeffs[pi * grid.ny() + pj] = c.conj();
        }
        Ok(SpectralField { grid, coeffs, real: true })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient of the signed mode `(m, n)`; zero off the lattice.
    pub fn coeff(&self, m: i64, n: i64) -> Complex64 {
        match (self.grid.index_x(m), self.grid.index_y(n)) {
            (Some(i), Some(j)) => self.coeffs[i * self.grid.ny() + j],
            _ => ZERO,
        }
    }

    /// `|Omega| sum |c|²`, the squared L² norm of the represented function.
    pub fn energy(&self) -> f64 {
        self.grid.area() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Energy carried by modes where `region(xi, lambda)` holds.
    pub fn energy_where(&self, region: impl Fn(f64, f64) -> bool) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for i in 0..g.nx() {
            let xi = g.xi(i);
            for j in 0..g.ny() {
                if region(xi, g.lambda(j)) {
                    s += self.coeffs[i * g.ny() + j].norm_sqr();
                }
            }
        }
        g.area() * s
    }

    pub fn scale(&self, c: f64) -> Self {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
            real: self.real,
        }
    }

    /// `a self + b other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x * a + y * b).collect();
        Ok(SpectralField { grid: self.grid, coeffs, real: self.real && other.real })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, 1.0)
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    /// Copy with the Nyquist row and column set to zero.
    pub fn without_nyquist(&self) -> Self {
        let g = self.grid;
        let mut coeffs = self.coeffs.clone();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                if g.is_nyquist(i, j) {
                    coeffs[i * g.ny() + j] = ZERO;
                }
            }
        }
        SpectralField { grid: g, coeffs, real: self.real }
    }

    /// `<F, G> = |Omega| sum c_F conj(c_G)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.area())
    }
}

fn is_hermitian(grid: &Grid2D, coeffs: &[Complex64]) -> bool {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let tol = 1e-13 * scale;
    for i in 0..grid.nx() {
        for j in 0..grid.ny() {
            let (pi, pj) = grid.partner(i, j);
            let a = coeffs[i * grid.ny() + j];
            let b = coeffs[pi * grid.ny() + pj];
            if (a - b.conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

fn sign(i: usize, j: usize) -> f64 {
    if (i + j) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Exact DFT of the samples into Fourier-series coefficients.
pub fn forward_transform(f: &PhysicalField) -> SpectralField {
    let g = f.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_2d(&mut data, nx, ny, FftDirection::Forward);
    let norm = 1.0 / (nx * ny) as f64;
    for i in 0..nx {
        for j in 0..ny {
            data[i * ny + j] *= sign(i, j) * norm;
        }
    }
    SpectralField { grid: g, coeffs: data, real: true }
}

/// Complex samples `sum c e^{i(xi x + lambda y)}` on the spatial lattice.
pub fn inverse_transform_complex(f: &SpectralField) -> Vec<Complex64> {
    let g = f.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let mut data = f.coeffs.clone();
    for i in 0..nx {
        for j in 0..ny {
            data[i * ny + j] *= sign(i, j);
        }
    }
    fft_2d(&mut data, nx, ny, FftDirection::Inverse);
    data
}

/// Samples of a real field. Fails if the reality flag is not set.
pub fn inverse_transform(f: &SpectralField) -> Result<PhysicalField> {
    if !f.real {
        return Err(Error::NotReal { op: "inverse_transform" });
    }
    let data = inverse_transform_complex(f);
    Ok(PhysicalField { grid: f.grid, values: data.into_iter().map(|z| z.re).collect() })
}

/// Multiplies each coefficient by `m(xi, lambda)` and zeroes the Nyquist row and column.
///
/// The result is flagged real iff the input is and `m(-xi, -lambda) = conj(m(xi, lambda))`
/// on the lattice.
pub fn apply_multiplier(f: &SpectralField, m: impl Fn(f64, f64) -> Complex64) -> Result<SpectralField> {
    let g = f.grid;
    let ny = g.ny();
    let mut table = vec![ZERO; g.len()];
    for i in 0..g.nx() {
        let xi = g.xi(i);
        for j in 0..ny {
            if g.is_nyquist(i, j) {
                continue;
            }
            let v = m(xi, g.lambda(j));
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite("multiplier"));
            }
            table[i * ny + j] = v;
        }
    }
    let mut hermitian = true;
    if f.real {
        'outer: for i in 0..g.nx() {
            for j in 0..ny {
                let (pi, pj) = g.partner(i, j);
                let a = table[i * ny + j];
                let b = table[pi * ny + pj];
                if (a - b.conj()).norm() > 1e-14 * a.norm().max(1e-300) && a != b.conj() {
                    hermitian = false;
                    break 'outer;
                }
            }
        }
    }
    let coeffs = f.coeffs.iter().zip(&table).map(|(c, t)| c * t).collect();
    Ok(SpectralField { grid: g, coeffs, real: f.real && hermitian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        make_grid(PI, PI, 16, 16).unwrap()
    }

    #[test]
    fn cosine_has_two_half_modes() {
        let f = PhysicalField::from_fn(grid(), |x, y| (x + y).cos());
        let s = forward_transform(&f);
        for i in 0..16 {
            for j in 0..16 {
                let (m, n) = (grid().mode_x(i), grid().mode_y(j));
                let c = s.coeff(m, n);
                if (m, n) == (1, 1) || (m, n) == (-1, -1) {
                    assert!((c.norm() - 0.5).abs() < 1e-15);
                } else {
                    assert!(c.norm() < 1e-15);
                }
            }
        }
        assert!(s.is_real());
    }

    #[test]
    fn zero_in_zero_out() {
        let s = forward_transform(&PhysicalField::zeros(grid()));
        assert!(s.coeffs().iter().all(|c| *c == ZERO));
        let f = inverse_transform(&SpectralField::zeros(grid())).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn real_mode_inverts_to_cosine() {
        let s = SpectralField::real_mode(grid(), 1, 0, Complex64::new(0.5, 0.0)).unwrap();
        let f = inverse_transform(&s).unwrap();
        let want = PhysicalField::from_fn(grid(), |x, _| x.cos());
        assert!(f.sub(&want).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn inverse_refuses_complex_fields() {
        let mut c = vec![ZERO; grid().len()];
        c[1] = Complex64::new(1.0, 0.0);
        let s = SpectralField::from_coeffs(grid(), c).unwrap();
        assert!(!s.is_real());
        assert!(matches!(inverse_transform(&s), Err(Error::NotReal { .. })));
        assert_eq!(inverse_transform_complex(&s).len(), grid().len());
    }

    #[test]
    fn multiplier_identity_zero_and_composition() {
        let f = PhysicalField::from_fn(grid(), |x, y| (2.0 * x - y).sin() + (x + 3.0 * y).cos());
        let s = forward_transform(&f);
        let id = apply_multiplier(&s, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(id, s.without_nyquist());
        let z = apply_multiplier(&s, |_, _| ZERO).unwrap();
        assert_eq!(z.energy(), 0.0);
        let dx = |xi: f64, _: f64| Complex64::new(0.0, xi);
        let twice = apply_multiplier(&apply_multiplier(&s, dx).unwrap(), dx).unwrap();
        let once = apply_multiplier(&s, |xi, _| Complex64::new(-xi * xi, 0.0)).unwrap();
        assert!(twice.sub(&once).unwrap().l2_norm() <= 1e-13 * once.l2_norm());
        assert!(twice.is_real());
    }

    #[test]
    fn non_hermitian_multiplier_clears_reality() {
        let s = forward_transform(&PhysicalField::from_fn(grid(), |x, _| x.cos()));
        let out = apply_multiplier(&s, |xi, _| Complex64::new(0.0, xi.abs())).unwrap();
        assert!(!out.is_real());
        assert!(apply_multiplier(&s, |_, _| Complex64::new(f64::NAN, 0.0)).is_err());
    }
}
