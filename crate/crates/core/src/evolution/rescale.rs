//! The scaling map `u_rho(x, y) = rho² u(rho x, rho² y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid2D, PhysicalField, SpectralField};

/// Dyadic scaling factor `rho = 2^-m` and the exponents it induces on norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub rho: f64,
}

impl ScalingParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) || rho.log2().fract() != 0.0 {
            return Err(Error::param("rho", format!("{rho} is not of the form 2^-m")));
        }
        Ok(ScalingParams { rho })
    }

    pub fn l2_exponent() -> f64 {
        0.5
    }
    pub fn dx_exponent(sigma: f64) -> f64 {
        0.5 + sigma
    }
    pub fn dy_exponent(gamma: f64) -> f64 {
        0.5 + 2.0 * gamma
    }
    /// `|| |y|^alpha D_x^sigma u_rho ||`.
    pub fn weighted_dx_exponent(sigma: f64, alpha: f64) -> f64 {
        0.5 + sigma - 2.0 * alpha
    }
    pub fn weighted_dy_exponent(gamma: f64, alpha: f64) -> f64 {
        0.5 + 2.0 * gamma - 2.0 * alpha
    }

    /// Grid carrying `u_rho` with the same sample counts.
    pub fn grid(&self, g: &Grid2D) -> Result<Grid2D> {
        Grid2D::new(g.lx() / self.rho, g.ly() / (self.rho * self.rho), g.nx(), g.ny())
    }
}

/// `u_rho` sampled on the stretched grid: samples times `rho²`, exact.
pub fn rescale_field(u: &PhysicalField, rho: f64) -> Result<PhysicalField> {
    let p = ScalingParams::new(rho)?;
    let grid = p.grid(u.grid())?;
    PhysicalField::new(grid, u.values().iter().map(|v| v * rho * rho).collect())
}

/// Spectral form of [`rescale_field`]: the lattice index is unchanged.
pub fn rescale_spectral(f: &SpectralField, rho: f64) -> Result<SpectralField> {
    let p = ScalingParams::new(rho)?;
    let grid = p.grid(f.grid())?;
    SpectralField::from_coeffs(grid, f.coeffs().iter().map(|c| c * (rho * rho)).collect())
}

/// `u_rho` on an arbitrary target grid whose lattice contains every rescaled frequency.
pub fn rescale_onto(f: &SpectralField, rho: f64, target: Grid2D) -> Result<SpectralField> {
    ScalingParams::new(rho)?;
    let g = f.grid();
    let ny = g.ny();
    let fx = rho * target.lx() / g.lx();
    let fy = rho * rho * target.ly() / g.ly();
    let mut out = vec![num_complex::Complex64::new(0.0, 0.0); target.len()];
    for (k, &c) in f.coeffs().iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let (m, n) = (g.mode_x(k / ny), g.mode_y(k % ny));
        let (mt, nt) = (m as f64 * fx, n as f64 * fy);
        let unrep = || Error::Unrepresentable { xi: g.xi(k / ny) * rho, lambda: g.lambda(k % ny) * rho * rho };
        if (mt - mt.round()).abs() > 1e-9 || (nt - nt.round()).abs() > 1e-9 {
            return Err(unrep());
        }
        match (target.index_x(mt.round() as i64), target.index_y(nt.round() as i64)) {
            (Some(i), Some(j)) if !target.is_nyquist(i, j) => out[i * target.ny() + j] = c * (rho * rho),
            _ => return Err(unrep()),
        }
    }
    SpectralField::from_coeffs(target, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::{frac_deriv, FracDerivSpec};
    use crate::spectral::testing::smooth_field;
    use crate::spectral::{forward_transform, inverse_transform};
    use std::f64::consts::PI;

    #[test]
    fn identity_and_refusal() {
        let g = Grid2D::new(PI, PI, 16, 16).unwrap();
        let u = inverse_transform(&smooth_field(g, 2)).unwrap();
        assert_eq!(rescale_field(&u, 1.0).unwrap(), u);
        assert!(rescale_field(&u, 0.3).is_err());
        assert!(rescale_field(&u, 2.0).is_err());
    }

    #[test]
    fn norm_exponents_are_exact() {
        let g = Grid2D::new(PI, PI, 32, 32).unwrap();
        let f = smooth_field(g, 5);
        for rho in [0.5, 0.25, 0.125] {
            let r = rescale_spectral(&f, rho).unwrap();
            assert!((r.l2_norm() / f.l2_norm() - rho.sqrt()).abs() < 1e-13);
            let dx = |h: &SpectralField| frac_deriv(h, FracDerivSpec::dx(1.0)).unwrap().l2_norm();
            assert!((dx(&r) / dx(&f) - rho.powf(1.5)).abs() < 1e-13);
            let dy = |h: &SpectralField| frac_deriv(h, FracDerivSpec::dy(1.0)).unwrap().l2_norm();
            assert!((dy(&r) / dy(&f) - rho.powf(2.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn physical_and_spectral_agree() {
        let g = Grid2D::new(PI, PI, 16, 16).unwrap();
        let f = smooth_field(g, 9);
        let u = inverse_transform(&f).unwrap();
        let a = forward_transform(&rescale_field(&u, 0.25).unwrap());
        let b = rescale_spectral(&f, 0.25).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn onto_nested_grid() {
        let g = Grid2D::new(PI, PI, 16, 16).unwrap();
        let f = smooth_field(g, 4);
        let rho = 0.5;
        let same = rescale_spectral(&f, rho).unwrap();
        let fine = Grid2D::new(2.0 * PI, 4.0 * PI, 32, 32).unwrap();
        let r = rescale_onto(&f, rho, fine).unwrap();
        assert!((r.l2_norm() - same.l2_norm()).abs() < 1e-13);
        let bad = Grid2D::new(1.5 * PI, 4.0 * PI, 32, 32).unwrap();
        assert!(matches!(rescale_onto(&f, rho, bad), Err(Error::Unrepresentable { .. })));
    }
}
