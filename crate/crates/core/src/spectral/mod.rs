//! Periodic grids, discrete Fourier transforms, the KP dispersion relation and
//! generic Fourier multipliers.
//!
//! Spectral coefficients are Fourier-series coefficients on the box
//! `[-Lx, Lx) x [-Ly, Ly)`:
//!
//! ```text
//! c(m, n) = 1/(Nx Ny) * sum_{i,j} f(x_i, y_j) exp(-i (xi_m x_i + lambda_n y_j))
//! f(x, y) = sum_{m,n} c(m, n) exp(i (xi_m x + lambda_n y))
//! ```
//!
//! so that `cos(x + y)` has two coefficients of modulus `1/2`. The spectral L²
//! norm carries the area factor, `||F|| = sqrt(|Omega|) ||c||`, which makes it
//! equal to the physical norm `sqrt(dx dy sum f²)` with Parseval constant one.

pub(crate) mod fft;
mod field;
mod grid;

pub use field::{
    apply_multiplier, forward_transform, inverse_transform, inverse_transform_complex,
    PhysicalField, SpectralField,
};
pub use grid::{make_grid, Grid2D};

use serde::{Deserialize, Serialize};

/// Sign of the transverse term: `KpI` is `gamma = -1`, `KpII` is `gamma = +1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionSign {
    #[default]
    KpI,
    KpII,
}

impl DispersionSign {
    pub fn gamma(self) -> f64 {
        match self {
            DispersionSign::KpI => -1.0,
            DispersionSign::KpII => 1.0,
        }
    }
}

/// `phi(xi, lambda) = xi³ - gamma lambda² / xi`, with `phi = 0` on `xi = 0`.
pub fn dispersion_phi(xi: f64, lambda: f64, s: DispersionSign) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    xi * xi * xi - s.gamma() * (lambda * lambda / xi)
}

/// Outcome of [`jacobian_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    pub points_checked: usize,
    /// `min |3 xi² - lambda²/xi²| / xi²` over the region, `+inf` if it is empty.
    pub min_ratio: f64,
    pub holds: bool,
}

/// Checks `|3 xi² - lambda²/xi²| >= (11/4) xi²` on every lattice point with
/// `|xi| >= max(1, 2 |lambda| / |xi|)`.
pub fn jacobian_check(grid: &Grid2D) -> JacobianReport {
    let mut points = 0;
    let mut min_ratio = f64::INFINITY;
    for i in 0..grid.nx() {
        let xi = grid.xi(i);
        if xi == 0.0 {
            continue;
        }
        for j in 0..grid.ny() {
            let lambda = grid.lambda(j);
            if xi.abs() < 1.0_f64.max(2.0 * lambda.abs() / xi.abs()) {
                continue;
            }
            let jac = (3.0 * xi * xi - lambda * lambda / (xi * xi)).abs();
            min_ratio = min_ratio.min(jac / (xi * xi));
            points += 1;
        }
    }
    JacobianReport { points_checked: points, min_ratio, holds: min_ratio >= 2.75 - 1e-12 }
}


#[cfg(test)]
pub(crate) mod testing {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::{Grid2D, SpectralField};

    /// Smooth real test field with zero x-mean column and no Nyquist content.
    pub(crate) fn smooth_field(grid: Grid2D, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
        let ny = grid.ny();
        for i in 0..grid.nx() {
            for j in 0..ny {
                let (m, n) = (grid.mode_x(i), grid.mode_y(j));
                if m <= 0 || grid.is_nyquist(i, j) {
                    continue;
                }
                let amp = 1.0 / (1.0 + (m * m + n * n) as f64);
                let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * amp;
                let (pi, pj) = grid.partner(i, j);
                c[i * ny + j] = z;
                c[pi * ny + pj] = z.conj();
            }
        }
        SpectralField::from_coeffs(grid, c).unwrap()
    }
}
