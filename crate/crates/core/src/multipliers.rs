//! Frequency projections, dyadic blocks, fractional derivatives and the `<y>` weight.
//!
//! Sharp cutoffs (`Q`, `P±`, the two `Q~` variants) are indicator multipliers.
//! Dyadic blocks use the smooth profile of [`BumpProfile`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{apply_multiplier, Grid2D, PhysicalField, SpectralField};

/// Default slack added to every open exponent `a+`.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Relative zero-line energy above which negative homogeneous orders are refused.
pub const ZERO_LINE_TOL: f64 = 1e-13;

/// Address of the block `|xi| ~ 2^k`, `|lambda/xi| ~ 2^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub k: i32,
    pub j: i32,
}

impl DyadicIndex {
    pub fn new(k: i32, j: i32) -> Self {
        DyadicIndex { k, j }
    }
}

/// Smooth even profile supported in `[1/2, 2]` with `sum_k psi(2^-k r)² = 1`.
///
/// `psi(r) = cos(pi/2 nu(|log2 r|))` where `nu` is the `C^inf` step
/// `nu(u) = f(u) / (f(u) + f(1-u))`, `f(u) = exp(-1/u)`. Since
/// `nu(1-u) = 1 - nu(u)`, neighbouring squares add to `cos² + sin² = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile;

fn smooth_step(u: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = f(u);
    a / (a + f(1.0 - u))
}

impl BumpProfile {
    pub fn psi(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= 0.5 || r >= 2.0 {
            return 0.0;
        }
        let u = r.log2().abs();
        (std::f64::consts::FRAC_PI_2 * smooth_step(u)).cos()
    }

    /// `psi(2^-k |xi|) psi(2^-j |lambda/xi|)`, zero on `xi = 0`.
    pub fn theta(&self, idx: DyadicIndex, xi: f64, lambda: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        let a = xi.abs() * 2f64.powi(-idx.k);
        let b = (lambda / xi).abs() * 2f64.powi(-idx.j);
        self.psi(a) * self.psi(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivKind {
    /// `D^s`, symbol `|xi|^s`.
    Homogeneous,
    /// `(1 + D)^s`, symbol `(1 + |xi|)^s`.
    Inhomogeneous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracDerivSpec {
    pub axis: Axis,
    pub order: f64,
    pub kind: DerivKind,
}

impl FracDerivSpec {
    pub fn dx(order: f64) -> Self {
        FracDerivSpec { axis: Axis::X, order, kind: DerivKind::Homogeneous }
    }
    pub fn dy(order: f64) -> Self {
        FracDerivSpec { axis: Axis::Y, order, kind: DerivKind::Homogeneous }
    }
    pub fn dx_inh(order: f64) -> Self {
        FracDerivSpec { axis: Axis::X, order, kind: DerivKind::Inhomogeneous }
    }
    pub fn dy_inh(order: f64) -> Self {
        FracDerivSpec { axis: Axis::Y, order, kind: DerivKind::Inhomogeneous }
    }

    fn value(&self, xi: f64, lambda: f64) -> f64 {
        let v = match self.axis {
            Axis::X => xi.abs(),
            Axis::Y => lambda.abs(),
        };
        match self.kind {
            DerivKind::Homogeneous if v == 0.0 => {
                if self.order == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DerivKind::Homogeneous => v.powf(self.order),
            DerivKind::Inhomogeneous => (1.0 + v).powf(self.order),
        }
    }

    fn needs_zero_line(&self) -> bool {
        self.kind == DerivKind::Homogeneous && self.order < 0.0
    }
}

/// One diagonal factor of a multiplier chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Symbol {
    /// `|xi| >= 1`.
    Q,
    /// `Id - Q`.
    Low,
    /// `xi² >= |lambda|`.
    PPlus,
    PMinus,
    /// `|lambda / xi| >= 1`.
    QTildeRatio,
    /// `|lambda| >= 1`.
    QTildeY,
    /// `xi != 0`.
    NonZeroX,
    /// `d/dx`, symbol `i xi`.
    Dx,
    /// `d/dy`, symbol `i lambda`.
    Dy,
    /// `d/dx^-1`, symbol `1 / (i xi)`.
    AntiDx,
    Deriv(FracDerivSpec),
    /// `D_x² + D_y²`.
    Laplacian,
    /// `psi(2^-k |xi|)`.
    DyadicX { k: i32 },
    /// `psi(2^-j |lambda|)`.
    DyadicY { j: i32 },
    Block(DyadicIndex),
}

impl Symbol {
    pub fn value(&self, xi: f64, lambda: f64) -> Complex64 {
        let re = |v: f64| Complex64::new(v, 0.0);
        let ind = |b: bool| re(if b { 1.0 } else { 0.0 });
        match *self {
            Symbol::Q => ind(xi.abs() >= 1.0),
            Symbol::Low => ind(xi.abs() < 1.0),
            Symbol::PPlus => ind(xi * xi >= lambda.abs()),
            Symbol::PMinus => ind(xi * xi < lambda.abs()),
            Symbol::QTildeRatio => ind(xi != 0.0 && (lambda / xi).abs() >= 1.0),
            Symbol::QTildeY => ind(lambda.abs() >= 1.0),
            Symbol::NonZeroX => ind(xi != 0.0),
            Symbol::Dx => Complex64::new(0.0, xi),
            Symbol::Dy => Complex64::new(0.0, lambda),
            Symbol::AntiDx => {
                if xi == 0.0 {
                    re(0.0)
                } else {
                    Complex64::new(0.0, -1.0 / xi)
                }
            }
            Symbol::Deriv(d) => re(d.value(xi, lambda)),
            Symbol::Laplacian => re(xi * xi + lambda * lambda),
            Symbol::DyadicX { k } => re(BumpProfile.psi(xi.abs() * 2f64.powi(-k))),
            Symbol::DyadicY { j } => re(BumpProfile.psi(lambda.abs() * 2f64.powi(-j))),
            Symbol::Block(idx) => re(BumpProfile.theta(idx, xi, lambda)),
        }
    }

    /// Which zero line must be empty for the symbol to be meaningful.
    fn zero_line(&self) -> Option<Axis> {
        match self {
            Symbol::AntiDx => Some(Axis::X),
            Symbol::Deriv(d) if d.needs_zero_line() => Some(d.axis),
            _ => None,
        }
    }
}

/// Relative energy of `f` on the line `xi = 0` (or `lambda = 0`).
pub fn zero_line_fraction(f: &SpectralField, axis: Axis) -> f64 {
    let total = f.energy();
    if total == 0.0 {
        return 0.0;
    }
    let on = match axis {
        Axis::X => f.energy_where(|xi, _| xi == 0.0),
        Axis::Y => f.energy_where(|_, la| la == 0.0),
    };
    on / total
}

fn require_zero_line(f: &SpectralField, axis: Axis, op: &'static str) -> Result<()> {
    let ratio = zero_line_fraction(f, axis);
    if ratio > ZERO_LINE_TOL {
        return Err(Error::ZeroModeEnergy { op, ratio });
    }
    Ok(())
}

/// Applies the product of `chain` as one multiplier.
///
/// Zero-line preconditions are checked only where the remaining factors are
/// nonzero, so `[Q, D_x^-s]` accepts fields with energy on `xi = 0`.
pub fn apply_chain(f: &SpectralField, chain: &[Symbol]) -> Result<SpectralField> {
    if chain.is_empty() {
        return Ok(f.without_nyquist());
    }
    for (pos, s) in chain.iter().enumerate() {
        if let Some(axis) = s.zero_line() {
            let others: Vec<Symbol> = chain.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, s)| *s).collect();
            let masked = apply_multiplier(f, |xi, la| {
                if others.iter().all(|o| o.value(xi, la) != Complex64::new(0.0, 0.0)) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })?;
            let total = f.energy();
            let on = match axis {
                Axis::X => masked.energy_where(|xi, _| xi == 0.0),
                Axis::Y => masked.energy_where(|_, la| la == 0.0),
            };
            if total > 0.0 && on / total > ZERO_LINE_TOL {
                return Err(Error::ZeroModeEnergy { op: "multiplier chain", ratio: on / total });
            }
        }
    }
    apply_multiplier(f, |xi, la| chain.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.value(xi, la)))
}

pub fn project_q(f: &SpectralField) -> SpectralField {
    apply_sharp(f, Symbol::Q)
}
pub fn project_low(f: &SpectralField) -> SpectralField {
    apply_sharp(f, Symbol::Low)
}
pub fn project_pplus(f: &SpectralField) -> SpectralField {
    apply_sharp(f, Symbol::PPlus)
}
pub fn project_pminus(f: &SpectralField) -> SpectralField {
    apply_sharp(f, Symbol::PMinus)
}
pub fn q_tilde_ratio(f: &SpectralField) -> SpectralField {
    apply_sharp(f, Symbol::QTildeRatio)
}
pub fn q_tilde_y(f: &SpectralField) -> SpectralField {
    apply_sharp(f, Symbol::QTildeY)
}

fn apply_sharp(f: &SpectralField, s: Symbol) -> SpectralField {
    apply_multiplier(f, |xi, la| s.value(xi, la)).expect("indicator multipliers are finite")
}

/// Multiplies by `theta_{k,j}`.
pub fn block_tkj(f: &SpectralField, idx: DyadicIndex, bump: &BumpProfile) -> SpectralField {
    apply_multiplier(f, |xi, la| Complex64::new(bump.theta(idx, xi, la), 0.0)).expect("bump is finite")
}

/// Littlewood-Paley piece `psi(2^-k |xi|)`.
pub fn dyadic_pk(f: &SpectralField, k: i32) -> SpectralField {
    apply_sharp(f, Symbol::DyadicX { k })
}

/// Rectangle piece `psi(2^-k |xi|) psi(2^-j |lambda|)`.
pub fn dyadic_pkj(f: &SpectralField, k: i32, j: i32) -> SpectralField {
    apply_multiplier(f, |xi, la| Symbol::DyadicX { k }.value(xi, la) * Symbol::DyadicY { j }.value(xi, la))
        .expect("bump is finite")
}

pub fn frac_deriv(f: &SpectralField, spec: FracDerivSpec) -> Result<SpectralField> {
    if !spec.order.is_finite() || spec.order < -2.0 {
        return Err(Error::param("order", format!("must be finite and >= -2, got {}", spec.order)));
    }
    if spec.needs_zero_line() {
        require_zero_line(f, spec.axis, "frac_deriv")?;
    }
    apply_multiplier(f, |xi, la| Complex64::new(spec.value(xi, la), 0.0))
}

pub fn antideriv_x(f: &SpectralField) -> Result<SpectralField> {
    require_zero_line(f, Axis::X, "antideriv_x")?;
    apply_multiplier(f, |xi, la| Symbol::AntiDx.value(xi, la))
}

/// Pointwise multiplication by `<y>^alpha = (1 + y²)^(alpha/2)`.
pub fn weight_y(f: &PhysicalField, alpha: f64) -> Result<PhysicalField> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 2], got {alpha}")));
    }
    Ok(weighted(f, |y| (1.0 + y * y).powf(0.5 * alpha)))
}

/// Pointwise multiplication by `|y|^alpha`.
pub fn abs_weight_y(f: &PhysicalField, alpha: f64) -> Result<PhysicalField> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 2], got {alpha}")));
    }
    Ok(weighted(f, |y| if alpha == 0.0 { 1.0 } else { y.abs().powf(alpha) }))
}

fn weighted(f: &PhysicalField, w: impl Fn(f64) -> f64) -> PhysicalField {
    let g: Grid2D = *f.grid();
    let wy: Vec<f64> = (0..g.ny()).map(|j| w(g.y(j))).collect();
    let ny = g.ny();
    let values = f.values().iter().enumerate().map(|(idx, v)| v * wy[idx % ny]).collect();
    PhysicalField::new(g, values).expect("weights are finite")
}
