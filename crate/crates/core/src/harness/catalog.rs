//! Left and right sides of each two-dimensional catalog entry.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, random_spectrum, EstimateId, EstimateSpec, SpectrumSpec, SUPPORT_TOL};
use crate::error::{Error, Result};
use crate::evolution::{rescale_spectral, LinearGroup};
use crate::multipliers::{abs_weight_y, apply_chain, weight_y, FracDerivSpec, Symbol};
use crate::norms::{lattice_maximal_norm, mixed_norm, weighted_l2, Direction, Exponent, TrajectoryField, Var};
use crate::spectral::{apply_multiplier, dispersion_phi, inverse_transform, DispersionSign, Grid2D, SpectralField};

/// One evaluation of both sides of an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub lhs: f64,
    pub rhs: f64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.lhs / self.rhs
    }

    fn max(self, other: Ratio) -> Ratio {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }
}

const SIGN: DispersionSign = DispersionSign::KpI;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn dxi(o: f64) -> Symbol {
    Symbol::Deriv(FracDerivSpec::dx_inh(o))
}
fn dyi(o: f64) -> Symbol {
    Symbol::Deriv(FracDerivSpec::dy_inh(o))
}
fn dxh(o: f64) -> Symbol {
    Symbol::Deriv(FracDerivSpec::dx(o))
}
fn dyh(o: f64) -> Symbol {
    Symbol::Deriv(FracDerivSpec::dy(o))
}

/// `t -> chain U(t) f` sampled at `times`.
fn evolve(f: &SpectralField, times: &[f64], chain: &[Symbol]) -> Result<TrajectoryField> {
    let group = LinearGroup::new(*f.grid(), SIGN);
    let base = apply_chain(f, chain)?;
    let fields = times.par_iter().map(|&t| inverse_transform(&group.apply(&base, t))).collect::<Result<Vec<_>>>()?;
    TrajectoryField::new(times.to_vec(), fields)
}

fn weigh(traj: &TrajectoryField, alpha: f64) -> Result<TrajectoryField> {
    let fields = traj.fields().iter().map(|f| weight_y(f, alpha)).collect::<Result<Vec<_>>>()?;
    TrajectoryField::new(traj.times().to_vec(), fields)
}

/// `|| |y|^alpha chain f ||`.
fn abs_weighted_l2(f: &SpectralField, chain: &[Symbol], alpha: f64) -> Result<f64> {
    Ok(abs_weight_y(&inverse_transform(&apply_chain(f, chain)?)?, alpha)?.l2_norm())
}

/// `||U(t) u0||_{L^q_t L^p_xy}` over `times` against `||u0||`, `(q, p) = (2/(1-theta), 2/theta)`.
pub fn strichartz_ratio(u0: &SpectralField, times: &[f64], theta: f64) -> Result<Ratio> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", format!("must lie in (0, 1), got {theta}")));
    }
    let (q, p) = (Exponent::new(2.0 / (1.0 - theta))?, Exponent::new(2.0 / theta)?);
    let traj = evolve(u0, times, &[])?;
    Ok(Ratio { lhs: mixed_norm(&traj, [Var::T, Var::X, Var::Y], [q, p, p])?, rhs: u0.l2_norm() })
}

/// `(e^{zt} - 1) / z`.
fn expm1_over(z: Complex64, t: f64) -> Complex64 {
    let zt = z * t;
    if zt.norm() < 1e-4 {
        t * (1.0 + zt / 2.0 + zt * zt / 6.0 + zt * zt * zt / 24.0)
    } else {
        (zt.exp() - 1.0) / z
    }
}

/// `∫_0^t U(t - s) (cos(pi s) g1 + sin(pi s) g2) ds`, mode by mode in closed form.
fn duhamel_trig(g1: &SpectralField, g2: &SpectralField, t: f64) -> Result<SpectralField> {
    let pi = std::f64::consts::PI;
    let j = |phi: f64, w: f64| Complex64::from_polar(1.0, t * phi) * expm1_over(Complex64::new(0.0, w - phi), t);
    let a = apply_multiplier(g1, |xi, la| {
        let phi = dispersion_phi(xi, la, SIGN);
        0.5 * (j(phi, pi) + j(phi, -pi))
    })?;
    let b = apply_multiplier(g2, |xi, la| {
        let phi = dispersion_phi(xi, la, SIGN);
        (j(phi, pi) - j(phi, -pi)) / Complex64::new(0.0, 2.0)
    })?;
    a.add(&b)
}

fn require_support(spec: &EstimateSpec, f: &SpectralField) -> Result<()> {
    let leak = spec.support.leak(f);
    if leak > SUPPORT_TOL {
        return Err(Error::Support { op: "run_estimate_check", ratio: leak });
    }
    Ok(())
}

/// Both sides of `spec.id` for one ensemble member on `grid`.
pub(super) fn evaluate(spec: &EstimateSpec, member: &SpectrumSpec, grid: &Grid2D) -> Result<Ratio> {
    use EstimateId::*;
    use Exponent::{Finite, Infinity};
    let u0 = random_spectrum(member, grid)?;
    require_support(spec, &u0)?;
    let eps = spec.epsilon;
    let alpha = 0.5 + eps;
    let (sigma, gamma, theta) = (0.75 + eps, 0.5 + eps, 1.0 + eps);
    let sym = linspace(-1.0, 1.0, spec.t_samples);
    let pos = linspace(0.0, 1.0, spec.t_samples);
    let l2 = Finite(2.0);
    let norm = |chain: &[Symbol], a: f64| weighted_l2(&u0, chain, a);
    let maximal = |chain: &[Symbol], d: Direction, a: f64| lattice_maximal_norm(&evolve(&u0, &sym, chain)?, d, a);

    let (lhs, rhs) = match spec.id {
        SmoothingPlus => {
            let traj = evolve(&u0, &sym, &[Symbol::Dx, Symbol::PPlus, Symbol::Q])?;
            (mixed_norm(&traj, [Var::X, Var::T, Var::Y], [Infinity, l2, l2])?, u0.l2_norm())
        }
        SmoothingMinus => {
            let traj = evolve(&u0, &sym, &[dxh(0.5), Symbol::PMinus, Symbol::Q])?;
            (mixed_norm(&traj, [Var::Y, Var::T, Var::X], [Infinity, l2, l2])?, u0.l2_norm())
        }
        SmoothingInhomog => {
            let aux = SpectrumSpec { seed: derive_seed(member.seed, usize::MAX, 1), ..*member };
            let g2 = random_spectrum(&aux, grid)?;
            require_support(spec, &g2)?;
            let pi = std::f64::consts::PI;
            let duhamel = pos
                .par_iter()
                .map(|&t| inverse_transform(&apply_chain(&duhamel_trig(&u0, &g2, t)?, &[Symbol::Dx])?))
                .collect::<Result<Vec<_>>>()?;
            let forcing = pos
                .iter()
                .map(|&t| inverse_transform(&u0.lincomb((pi * t).cos(), &g2, (pi * t).sin())?))
                .collect::<Result<Vec<_>>>()?;
            let lhs = mixed_norm(&TrajectoryField::new(pos.clone(), duhamel)?, [Var::Y, Var::T, Var::X], [Infinity, l2, l2])?;
            let rhs = mixed_norm(&TrajectoryField::new(pos.clone(), forcing)?, [Var::Y, Var::X, Var::T], [Finite(1.0), l2, l2])?;
            (lhs, rhs)
        }
        MaximalXHigh => (maximal(&[Symbol::Q], Direction::YOuter, 0.0)?, norm(&[Symbol::Q, dxi(sigma), dyi(gamma)], 0.0)?),
        MaximalYHigh => (
            maximal(&[Symbol::Q], Direction::XOuter, 0.0)?,
            norm(&[Symbol::Q, dxi(sigma), dyi(gamma)], 0.0)? + norm(&[Symbol::Q, dyi(theta)], 0.0)?,
        ),
        MaximalXLow => (maximal(&[Symbol::Low], Direction::YOuter, 0.0)?, norm(&[Symbol::Low, dxh(-gamma), dyi(gamma)], 0.0)?),
        MaximalYLow => {
            let s = 0.25 + eps;
            (maximal(&[Symbol::Low], Direction::XOuter, 0.0)?, norm(&[Symbol::Low, dxh(-s), dyi(theta)], 0.0)?)
        }
        WeightedMaximalX => (
            maximal(&[Symbol::Q], Direction::YOuter, alpha)?,
            norm(&[dxi(sigma), dyi(gamma)], alpha)? + norm(&[dxi(sigma - 0.5), dyi(gamma + 0.5)], 0.0)?,
        ),
        WeightedMaximalLow => {
            let s = 0.25 + eps;
            (
                maximal(&[Symbol::Low], Direction::YOuter, alpha)?,
                norm(&[dxh(-gamma), dyi(gamma)], alpha)? + norm(&[dxh(-theta), dyi(s)], 0.0)?,
            )
        }
        GroupWeighted | GroupWeightedLow => {
            let (proj, extra) = if spec.id == GroupWeighted {
                (Symbol::Q, norm(&[dyi(alpha), dxi(-alpha)], 0.0)?)
            } else {
                (Symbol::Low, norm(&[dyi(alpha), dxh(-alpha - eps)], 0.0)?)
            };
            let traj = evolve(&u0, &sym, &[proj])?;
            let lhs = traj.fields().iter().try_fold(0.0_f64, |m, f| Ok::<_, Error>(m.max(weight_y(f, alpha)?.l2_norm())))?;
            (lhs, norm(&[], alpha)? + extra)
        }
        Strichartz => {
            let r = strichartz_ratio(&u0, &sym, 0.5)?.max(strichartz_ratio(&u0, &sym, 0.25)?);
            (r.lhs, r.rhs)
        }
        WeightedLinfty => {
            let traj = weigh(&evolve(&u0, &pos, &[Symbol::Q])?, alpha)?;
            let lhs = mixed_norm(&traj, [Var::T, Var::X, Var::Y], [l2, Infinity, Infinity])?;
            let mixed = apply_multiplier(&apply_chain(&u0, &[Symbol::Q])?, |xi, la| {
                Complex64::new((1.0 + xi.abs()).powf(eps) + (1.0 + la.abs()).powf(eps), 0.0)
            })?;
            let rhs = weight_y(&inverse_transform(&mixed)?, alpha)?.l2_norm() + norm(&[Symbol::Q, dyi(alpha + eps)], 0.0)?;
            (lhs, rhs)
        }
        WeightedLinftyLow => {
            let traj = weigh(&evolve(&u0, &pos, &[Symbol::Low])?, alpha)?;
            let lhs = mixed_norm(&traj, [Var::T, Var::X, Var::Y], [l2, Infinity, Infinity])?;
            let rhs = norm(&[dyi(eps)], alpha)? + norm(&[Symbol::Low, dxh(-alpha - eps), dyi(alpha + 2.0 * eps)], 0.0)?;
            (lhs, rhs)
        }
        Scaling => {
            let g = 1.0 + eps;
            let mut best = Ratio { lhs: 0.0, rhs: 1.0 };
            for m in 1..=4 {
                let rho = 0.5f64.powi(m);
                let r = rescale_spectral(&u0, rho)?;
                let pairs = [
                    (weighted_l2(&r, &[dxh(1.0)], 0.0)?, rho.powf(1.5) * weighted_l2(&u0, &[dxh(1.0)], 0.0)?),
                    (weighted_l2(&r, &[dyh(1.0)], 0.0)?, rho.powf(2.5) * weighted_l2(&u0, &[dyh(1.0)], 0.0)?),
                    (
                        abs_weighted_l2(&r, &[dxh(1.0)], alpha)?,
                        rho.powf(1.5 - 2.0 * alpha) * abs_weighted_l2(&u0, &[dxh(1.0)], alpha)?,
                    ),
                    (
                        abs_weighted_l2(&r, &[dyh(g)], alpha)?,
                        rho.powf(0.5 + 2.0 * g - 2.0 * alpha) * weighted_l2(&u0, &[dyh(g)], alpha)?,
                    ),
                ];
                for (lhs, rhs) in pairs {
                    best = best.max(Ratio { lhs, rhs });
                }
            }
            (best.lhs, best.rhs)
        }
        FracLeibniz1d | WeightCommutator1d => {
            return Err(Error::param("estimate", format!("{} is a one-dimensional check", spec.id)));
        }
    };
    Ok(Ratio { lhs, rhs })
}
