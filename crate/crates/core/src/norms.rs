//! Norm functionals: mixed Lebesgue norms over `(t, x, y)`, weighted anisotropic
//! Sobolev norms, the data norms `Z0`, `X0`, `Y0`, the twelve solution norms and
//! the unit-cell maximal norms.
//!
//! Space integrals use the periodic weights `dx`, `dy`; time integrals use
//! trapezoid weights on the sample times. `L^inf` is the max over samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{apply_chain, weight_y, FracDerivSpec, Symbol, ZERO_LINE_TOL};
use crate::spectral::{forward_transform, inverse_transform, Grid2D, PhysicalField, SpectralField};

/// A Lebesgue exponent in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Exponent::Infinity);
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param("exponent", format!("must be >= 1 or inf, got {p}")));
        }
        Ok(Exponent::Finite(p))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    fn reduce(self, values: &[f64], weights: &[f64]) -> f64 {
        match self {
            Exponent::Infinity => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Exponent::Finite(p) if p == 2.0 => {
                values.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
            }
            Exponent::Finite(p) if p == 1.0 => values.iter().zip(weights).map(|(v, w)| w * v.abs()).sum(),
            Exponent::Finite(p) => {
                let scale = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = values.iter().zip(weights).map(|(v, w)| w * (v.abs() / scale).powf(p)).sum();
                scale * s.powf(1.0 / p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Text(t) if t == "inf" || t == "infinity" => f64::INFINITY,
            Raw::Text(t) => return Err(serde::de::Error::custom(format!("bad exponent `{t}`"))),
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    T,
    X,
    Y,
}

/// Samples `u(t_k)` of a real field on `[0, T]` (or any increasing set of times).
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryField {
    grid: Grid2D,
    times: Vec<f64>,
    fields: Vec<PhysicalField>,
    uniform: bool,
}

fn check_times(times: &[f64]) -> Result<bool> {
    if times.is_empty() {
        return Err(Error::param("times", "at least one sample time is required"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "must be finite and strictly increasing"));
    }
    if times.len() < 3 {
        return Ok(true);
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    Ok(times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0)))
}

impl TrajectoryField {
    pub fn new(times: Vec<f64>, fields: Vec<PhysicalField>) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::ShapeMismatch { expected: times.len(), got: fields.len() });
        }
        let uniform = check_times(&times)?;
        let grid = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(TrajectoryField { grid, times, fields, uniform })
    }

    /// The same field at every sample time.
    pub fn constant(field: &PhysicalField, times: Vec<f64>) -> Result<Self> {
        let fields = vec![field.clone(); times.len()];
        TrajectoryField::new(times, fields)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn fields(&self) -> &[PhysicalField] {
        &self.fields
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn scale(&self, c: f64) -> Self {
        TrajectoryField {
            grid: self.grid,
            times: self.times.clone(),
            fields: self.fields.iter().map(|f| f.scale(c)).collect(),
            uniform: self.uniform,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::param("times", "trajectories are sampled at different times"));
        }
        let fields = self.fields.iter().zip(&other.fields).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        TrajectoryField::new(self.times.clone(), fields)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.sub(&other.scale(-1.0))
    }

    pub fn spectral(&self) -> SpectralTrajectory {
        SpectralTrajectory { times: self.times.clone(), fields: self.fields.iter().map(forward_transform).collect() }
    }
}

/// Coefficients `u^(t_k)`, the spectral view of a [`TrajectoryField`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl SpectralTrajectory {
    pub fn physical(&self) -> Result<TrajectoryField> {
        let fields = self.fields.iter().map(inverse_transform).collect::<Result<_>>()?;
        TrajectoryField::new(self.times.clone(), fields)
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> Result<SpectralField>) -> Result<Self> {
        Ok(SpectralTrajectory { times: self.times.clone(), fields: self.fields.iter().map(f).collect::<Result<_>>()? })
    }

    pub fn grid(&self) -> &Grid2D {
        self.fields[0].grid()
    }
}

/// Trapezoid weights; a single sample gets weight one.
pub fn time_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| {
            let lo = if k == 0 { times[0] } else { times[k - 1] };
            let hi = if k == n - 1 { times[n - 1] } else { times[k + 1] };
            0.5 * (hi - lo)
        })
        .collect()
}

/// `|| || ||u||_{L^p_inner} ||_{L^q_middle} ||_{L^r_outer}` with `order = [outer, middle, inner]`.
pub fn mixed_norm(traj: &TrajectoryField, order: [Var; 3], exponents: [Exponent; 3]) -> Result<f64> {
    let mut seen = [false; 3];
    for v in order {
        let k = v as usize;
        if seen[k] {
            return Err(Error::param("order", format!("{order:?} is not a permutation of (t, x, y)")));
        }
        seen[k] = true;
    }
    let g = traj.grid;
    let (nt, nx, ny) = (traj.len(), g.nx(), g.ny());
    let size = |v: Var| match v {
        Var::T => nt,
        Var::X => nx,
        Var::Y => ny,
    };
    let tw = time_weights(&traj.times);
    let weights = |v: Var| -> Vec<f64> {
        match v {
            Var::T => tw.clone(),
            Var::X => vec![g.dx(); nx],
            Var::Y => vec![g.dy(); ny],
        }
    };
    let at = |t: usize, x: usize, y: usize| traj.fields[t].values()[x * ny + y];
    let pick = |v: Var, a: usize, b: usize, c: usize| -> usize {
        // Index of variable v given positions (a, b, c) along (outer, middle, inner).
        if order[0] == v {
            a
        } else if order[1] == v {
            b
        } else {
            c
        }
    };
    let (wo, wm, wi) = (weights(order[0]), weights(order[1]), weights(order[2]));
    let (so, sm, si) = (size(order[0]), size(order[1]), size(order[2]));
    let mut outer = Vec::with_capacity(so);
    let mut middle = vec![0.0; sm];
    let mut inner = vec![0.0; si];
    for a in 0..so {
        for (b, mv) in middle.iter_mut().enumerate() {
            for (c, iv) in inner.iter_mut().enumerate() {
                *iv = at(pick(Var::T, a, b, c), pick(Var::X, a, b, c), pick(Var::Y, a, b, c));
            }
            *mv = exponents[2].reduce(&inner, &wi);
        }
        outer.push(exponents[1].reduce(&middle, &wm));
    }
    Ok(exponents[0].reduce(&outer, &wo))
}

/// A named part of a composite norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub value: f64,
}

/// Value of a composite norm together with its parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub components: Vec<Component>,
}

impl NormValue {
    fn single(value: f64) -> Self {
        NormValue { value, components: Vec::new() }
    }

    fn sum(components: Vec<Component>) -> Self {
        NormValue { value: components.iter().map(|c| c.value).sum(), components }
    }

    fn max(components: Vec<Component>) -> Self {
        NormValue { value: components.iter().fold(0.0, |m, c| m.max(c.value)), components }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

fn comp(name: &str, value: f64) -> Component {
    Component { name: name.to_string(), value }
}

/// `|| <y>^alpha m(D) f ||_2` for the multiplier chain `m`.
pub fn weighted_l2(f: &SpectralField, chain: &[Symbol], alpha: f64) -> Result<f64> {
    let g = apply_chain(f, chain)?;
    if alpha == 0.0 {
        return Ok(g.l2_norm());
    }
    let p = inverse_transform(&g)?;
    Ok(weight_y(&p, alpha)?.l2_norm())
}

fn dx_of(order: f64, dotted: bool) -> Symbol {
    Symbol::Deriv(if dotted { FracDerivSpec::dx(order) } else { FracDerivSpec::dx_inh(order) })
}

fn dy_of(order: f64, dotted: bool) -> Symbol {
    Symbol::Deriv(if dotted { FracDerivSpec::dy(order) } else { FracDerivSpec::dy_inh(order) })
}

/// `|| <y>^alpha D_x^sigma D_y^gamma f ||_2`, with `(1 + D)` in place of `D` on undotted axes.
pub fn weighted_sobolev_norm(
    f: &PhysicalField,
    sigma: f64,
    gamma: f64,
    alpha: f64,
    dotted_x: bool,
    dotted_y: bool,
) -> Result<f64> {
    weighted_l2(&forward_transform(f), &[dx_of(sigma, dotted_x), dy_of(gamma, dotted_y)], alpha)
}

/// `||f|| + ||D_x² f|| + ||D_y² f||`.
pub fn h2_norm(f: &SpectralField) -> Result<f64> {
    Ok(f.l2_norm()
        + weighted_l2(f, &[Symbol::Deriv(FracDerivSpec::dx(2.0))], 0.0)?
        + weighted_l2(f, &[Symbol::Deriv(FracDerivSpec::dy(2.0))], 0.0)?)
}

/// Exponents of the initial-data norm for slack `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z0Exponents {
    pub alpha: f64,
    pub sigma: [f64; 5],
    pub gamma: [f64; 5],
}

impl Z0Exponents {
    pub fn new(eps: f64) -> Self {
        Z0Exponents {
            alpha: 0.5 + eps,
            sigma: [0.5 + eps, 0.25 + eps, 0.75 + eps, 0.75 + eps, 1.0 + eps],
            gamma: [0.5 + eps, 1.0 + eps, 1.5 + eps, 0.5 + eps, 1.0 + eps],
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("epsilon", format!("must be positive, got {eps}")));
    }
    Ok(())
}

/// The seven-part data norm: `H²` plus three low-frequency and three high-frequency parts.
pub fn z0_norm(f: &PhysicalField, eps: f64) -> Result<NormValue> {
    check_eps(eps)?;
    z0_norm_spectral(&forward_transform(f), eps)
}

pub fn z0_norm_spectral(f: &SpectralField, eps: f64) -> Result<NormValue> {
    let e = Z0Exponents::new(eps);
    let (s, g, a) = (e.sigma, e.gamma, e.alpha);
    let low = Symbol::Low;
    let dxh = |o: f64| Symbol::Deriv(FracDerivSpec::dx(o));
    let dxi = |o: f64| Symbol::Deriv(FracDerivSpec::dx_inh(o));
    let dyi = |o: f64| Symbol::Deriv(FracDerivSpec::dy_inh(o));
    Ok(NormValue::sum(vec![
        comp("h2", h2_norm(f)?),
        comp("low_0", weighted_l2(f, &[low, dxh(-s[0]), dyi(g[0])], a)?),
        comp("low_1", weighted_l2(f, &[low, dxh(-s[1]), dyi(g[1])], a)?),
        comp("low_2", weighted_l2(f, &[low, dxh(-s[2]), dyi(g[2])], 0.0)?),
        comp("high_3", weighted_l2(f, &[Symbol::Q, dxi(s[3]), dyi(g[3])], a)?),
        comp("high_4", weighted_l2(f, &[Symbol::Q, dyi(g[4])], a)?),
        comp("high_5", weighted_l2(f, &[Symbol::Q, dxi(s[4])], a)?),
    ]))
}

/// Parameters of the solution norms: `sigma1 > 3/4`, `gamma1 > 1/2`, `sigma2 > 1`,
/// `gamma2 > 1`, weight `alpha > 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XParams {
    pub sigma1: f64,
    pub gamma1: f64,
    pub sigma2: f64,
    pub gamma2: f64,
    pub alpha: f64,
}

impl XParams {
    pub fn from_epsilon(eps: f64) -> Self {
        XParams { sigma1: 0.75 + eps, gamma1: 0.5 + eps, sigma2: 1.0 + eps, gamma2: 1.0 + eps, alpha: 0.5 + eps }
    }
}

impl Default for XParams {
    fn default() -> Self {
        XParams::from_epsilon(crate::multipliers::DEFAULT_EPSILON)
    }
}

/// Indices of the norms entering the low-frequency maximum.
pub const Y_INDICES: [usize; 6] = [1, 3, 9, 10, 11, 12];

const SUPPORT_TOL: f64 = 1e-12;

fn require_q_support(traj: &SpectralTrajectory) -> Result<()> {
    for f in &traj.fields {
        let total = f.energy();
        if total == 0.0 {
            continue;
        }
        let low = f.energy_where(|xi, _| xi.abs() < 1.0);
        if low / total > SUPPORT_TOL {
            return Err(Error::Support { op: "x_norm", ratio: low / total });
        }
    }
    Ok(())
}

fn chained(traj: &SpectralTrajectory, chain: &[Symbol], alpha: f64) -> Result<TrajectoryField> {
    let fields = traj
        .fields
        .iter()
        .map(|f| {
            let p = inverse_transform(&apply_chain(f, chain)?)?;
            if alpha == 0.0 {
                Ok(p)
            } else {
                weight_y(&p, alpha)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectoryField::new(traj.times.clone(), fields)
}

fn sup_t(traj: &SpectralTrajectory, f: impl Fn(&SpectralField) -> Result<f64>) -> Result<f64> {
    traj.fields.iter().try_fold(0.0_f64, |m, s| Ok(m.max(f(s)?)))
}

/// The `i`-th solution norm (`1 <= i <= 12`) of a spectral trajectory.
pub fn x_norm_spectral(traj: &SpectralTrajectory, i: usize, p: &XParams) -> Result<f64> {
    use Exponent::{Finite, Infinity};
    let l2 = Finite(2.0);
    let (dxi, dyi) = (|o| dx_of(o, false), |o| dy_of(o, false));
    let smoothing_plus = [Var::X, Var::T, Var::Y];
    let smoothing_minus = [Var::Y, Var::T, Var::X];
    match i {
        1 => sup_t(traj, h2_norm),
        2 => sup_t(traj, |f| weighted_l2(f, &[dxi(p.sigma1), dyi(p.gamma1)], p.alpha)),
        3 => sup_t(traj, |f| weighted_l2(f, &[dyi(p.gamma2)], p.alpha)),
        4 => sup_t(traj, |f| weighted_l2(f, &[dxi(p.sigma2)], p.alpha)),
        5..=8 => {
            require_q_support(traj)?;
            let (proj, order) = if i <= 6 { (Symbol::PPlus, smoothing_plus) } else { (Symbol::PMinus, smoothing_minus) };
            let chain: Vec<Symbol> = if i % 2 == 1 {
                vec![Symbol::Dx, proj, Symbol::Laplacian]
            } else {
                vec![Symbol::Dx, proj, dxi(p.sigma1), dyi(p.gamma1)]
            };
            mixed_norm(&chained(traj, &chain, 0.0)?, order, [Infinity, l2, l2])
        }
        9 => mixed_norm(&chained(traj, &[], p.alpha)?, [Var::Y, Var::X, Var::T], [l2, Infinity, Infinity]),
        10 => mixed_norm(&chained(traj, &[], p.alpha)?, [Var::X, Var::Y, Var::T], [l2, Infinity, Infinity]),
        11 => mixed_norm(&chained(traj, &[Symbol::Dy], p.alpha)?, [Var::T, Var::X, Var::Y], [l2, Infinity, Infinity]),
        12 => mixed_norm(&chained(traj, &[Symbol::Dx], p.alpha)?, [Var::T, Var::X, Var::Y], [l2, Infinity, Infinity]),
        _ => Err(Error::param("i", format!("solution norms are numbered 1..=12, got {i}"))),
    }
}

pub fn x_norm(traj: &TrajectoryField, i: usize, params: &XParams) -> Result<f64> {
    if !(1..=12).contains(&i) {
        return Err(Error::param("i", format!("solution norms are numbered 1..=12, got {i}")));
    }
    x_norm_spectral(&traj.spectral(), i, params)
}

/// `max_i ||v||_i` over all twelve norms, with components.
pub fn x_norm_all(traj: &SpectralTrajectory, params: &XParams) -> Result<NormValue> {
    let parts = (1..=12).map(|i| Ok(comp(&format!("x{i}"), x_norm_spectral(traj, i, params)?))).collect::<Result<_>>()?;
    Ok(NormValue::max(parts))
}

/// `max` over the norms `1, 3, 9, 10, 11, 12`.
pub fn y_norm_set_spectral(traj: &SpectralTrajectory, params: &XParams) -> Result<NormValue> {
    let parts = Y_INDICES
        .iter()
        .map(|&i| Ok(comp(&format!("x{i}"), x_norm_spectral(traj, i, params)?)))
        .collect::<Result<_>>()?;
    Ok(NormValue::max(parts))
}

pub fn y_norm_set(traj: &TrajectoryField, params: &XParams) -> Result<NormValue> {
    y_norm_set_spectral(&traj.spectral(), params)
}

/// `max_{i <= 4} ||g||_i` at a single time.
pub fn x0_norm(f: &PhysicalField, params: &XParams) -> Result<NormValue> {
    x0_norm_spectral(&forward_transform(f), params)
}

pub fn x0_norm_spectral(f: &SpectralField, params: &XParams) -> Result<NormValue> {
    let one = SpectralTrajectory { times: vec![0.0], fields: vec![f.clone()] };
    let parts = (1..=4).map(|i| Ok(comp(&format!("x{i}"), x_norm_spectral(&one, i, params)?))).collect::<Result<_>>()?;
    Ok(NormValue::max(parts))
}

/// Low-frequency data norm, evaluated on `(Id - Q) g`.
pub fn y0_norm(f: &PhysicalField, eps: f64) -> Result<NormValue> {
    check_eps(eps)?;
    y0_norm_spectral(&forward_transform(f), eps)
}

pub fn y0_norm_spectral(f: &SpectralField, eps: f64) -> Result<NormValue> {
    let a = 0.5 + eps;
    let zero_col = f.energy_where(|xi, _| xi == 0.0);
    let total = f.energy();
    if total > 0.0 && zero_col / total > ZERO_LINE_TOL {
        return Err(Error::ZeroModeEnergy { op: "y0_norm", ratio: zero_col / total });
    }
    let low = apply_chain(f, &[Symbol::Low, Symbol::NonZeroX])?;
    let d = |sx: f64, gy: f64| [Symbol::Deriv(FracDerivSpec::dx(-sx)), Symbol::Deriv(FracDerivSpec::dy(gy))];
    Ok(NormValue::max(vec![
        comp("l2", low.l2_norm()),
        comp("y0_1", weighted_l2(&low, &d(0.25 + eps, 1.0 + eps), a)?),
        comp("y0_2", weighted_l2(&low, &d(0.5 + eps, 0.5 + eps), a)?),
        comp("y0_3", weighted_l2(&low, &d(0.75 + eps, 1.5 + eps), 0.0)?),
    ]))
}

/// `||Q g||_{X,0} + ||(Id - Q) g||_{Y,0}`.
pub fn z0_split_norm(f: &PhysicalField, eps: f64) -> Result<NormValue> {
    check_eps(eps)?;
    let s = forward_transform(f);
    let x = x0_norm_spectral(&apply_chain(&s, &[Symbol::Q])?, &XParams::from_epsilon(eps))?;
    let y = y0_norm_spectral(&s, eps)?;
    Ok(NormValue::sum(vec![comp("x0_high", x.value), comp("y0_low", y.value)]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Cells along y, sup over `x` and `t` inside.
    YOuter,
    /// Cells along x, sup over `y` and `t` inside.
    XOuter,
}

/// Per-cell suprema `sup_{cell s} sup_t |<y>^alpha u|`, cells `[s, s+1)` along the outer variable.
pub fn cell_suprema(traj: &TrajectoryField, direction: Direction, alpha: f64) -> Result<Vec<(i64, f64)>> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 2], got {alpha}")));
    }
    let g = traj.grid;
    let half = match direction {
        Direction::YOuter => g.ly(),
        Direction::XOuter => g.lx(),
    };
    if 2.0 * half < 1.0 {
        return Err(Error::param("grid", "unit cells do not fit in the domain"));
    }
    let coord = |k: usize| match direction {
        Direction::YOuter => g.y(k),
        Direction::XOuter => g.x(k),
    };
    let first = (-half).floor() as i64;
    let count = (half.ceil() as i64 - first) as usize;
    let mut sup = vec![0.0_f64; count];
    let wy: Vec<f64> = (0..g.ny()).map(|j| (1.0 + g.y(j).powi(2)).powf(0.5 * alpha)).collect();
    let ny = g.ny();
    for f in &traj.fields {
        for (idx, v) in f.values().iter().enumerate() {
            let (i, j) = (idx / ny, idx % ny);
            let k = match direction {
                Direction::YOuter => j,
                Direction::XOuter => i,
            };
            let cell = (coord(k).floor() as i64 - first) as usize;
            sup[cell] = sup[cell].max((v * wy[j]).abs());
        }
    }
    Ok(sup.into_iter().enumerate().map(|(c, s)| (c as i64 + first, s)).collect())
}

/// `(sum_s sup_{cell s} sup_t |<y>^alpha u|²)^(1/2)`.
pub fn lattice_maximal_norm(traj: &TrajectoryField, direction: Direction, alpha: f64) -> Result<f64> {
    Ok(cell_suprema(traj, direction, alpha)?.iter().map(|(_, s)| s * s).sum::<f64>().sqrt())
}

/// Declarative description of a norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    MixedLebesgue { order: [Var; 3], exponents: [Exponent; 3] },
    WeightedSobolev { sigma: f64, gamma: f64, alpha: f64, dotted_x: bool, dotted_y: bool },
    Z0 { epsilon: f64 },
    Z0Split { epsilon: f64 },
    X { i: usize, params: XParams },
    YSet { params: XParams },
    X0 { params: XParams },
    Y0 { epsilon: f64 },
    LatticeMaximal { direction: Direction, alpha: f64 },
}

impl NormSpec {
    pub fn id(&self) -> String {
        match self {
            NormSpec::MixedLebesgue { .. } => "mixed_lebesgue".into(),
            NormSpec::WeightedSobolev { .. } => "weighted_sobolev".into(),
            NormSpec::Z0 { .. } => "z0".into(),
            NormSpec::Z0Split { .. } => "z0_split".into(),
            NormSpec::X { i, .. } => format!("x_{i}"),
            NormSpec::YSet { .. } => "y_set".into(),
            NormSpec::X0 { .. } => "x0".into(),
            NormSpec::Y0 { .. } => "y0".into(),
            NormSpec::LatticeMaximal { .. } => "lattice_maximal".into(),
        }
    }

    /// Evaluates the norm; single-time norms act on the first sample of the trajectory.
    pub fn evaluate(&self, traj: &TrajectoryField) -> Result<NormValue> {
        let first = &traj.fields[0];
        match self {
            NormSpec::MixedLebesgue { order, exponents } => Ok(NormValue::single(mixed_norm(traj, *order, *exponents)?)),
            NormSpec::WeightedSobolev { sigma, gamma, alpha, dotted_x, dotted_y } => Ok(NormValue::single(
                weighted_sobolev_norm(first, *sigma, *gamma, *alpha, *dotted_x, *dotted_y)?,
            )),
            NormSpec::Z0 { epsilon } => z0_norm(first, *epsilon),
            NormSpec::Z0Split { epsilon } => z0_split_norm(first, *epsilon),
            NormSpec::X { i, params } => Ok(NormValue::single(x_norm(traj, *i, params)?)),
            NormSpec::YSet { params } => y_norm_set(traj, params),
            NormSpec::X0 { params } => x0_norm(first, params),
            NormSpec::Y0 { epsilon } => y0_norm(first, *epsilon),
            NormSpec::LatticeMaximal { direction, alpha } => {
                Ok(NormValue::single(lattice_maximal_norm(traj, *direction, *alpha)?))
            }
        }
    }

    pub fn record(&self, traj: &TrajectoryField) -> Result<NormRecord> {
        let v = self.evaluate(traj)?;
        Ok(NormRecord { norm: self.id(), params: self.clone(), value: v.value, components: v.components })
    }
}

/// Flat serializable result of a norm evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub norm: String,
    pub params: NormSpec,
    pub value: f64,
    pub components: Vec<Component>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::testing::smooth_field;
    use crate::spectral::make_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn times(n: usize, t: f64) -> Vec<f64> {
        (0..n).map(|k| t * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn constant_field_mixed_norms() {
        let g = make_grid(2.0, 3.0, 16, 8).unwrap();
        let c = PhysicalField::from_fn(g, |_, _| -1.5);
        let tr = TrajectoryField::constant(&c, times(9, 0.5)).unwrap();
        let v = mixed_norm(&tr, [Var::T, Var::X, Var::Y], [e(2.0); 3]).unwrap();
        assert!((v - 1.5 * g.area().sqrt() * 0.5f64.sqrt()).abs() < 1e-13);
        let v = mixed_norm(&tr, [Var::Y, Var::X, Var::T], [e(1.0), e(4.0), e(f64::INFINITY)]).unwrap();
        assert!((v - 1.5 * 6.0 * 4f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn single_column_sup() {
        let g = make_grid(PI, PI, 16, 16).unwrap();
        let f = PhysicalField::from_fn(g, |x, y| if (x - g.x(5)).abs() < 1e-12 { y.cos() + 2.0 } else { 0.0 });
        let tr = TrajectoryField::constant(&f, times(5, 1.0)).unwrap();
        let v = mixed_norm(&tr, [Var::X, Var::T, Var::Y], [e(f64::INFINITY), e(2.0), e(2.0)]).unwrap();
        let col: f64 = (0..16).map(|j| f.at(5, j).powi(2) * g.dy()).sum::<f64>().sqrt();
        assert!((v - col).abs() < 1e-13);
        let z = TrajectoryField::constant(&PhysicalField::zeros(g), times(3, 1.0)).unwrap();
        assert_eq!(mixed_norm(&z, [Var::X, Var::T, Var::Y], [e(2.0); 3]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_orders_and_exponents() {
        let g = make_grid(PI, PI, 8, 8).unwrap();
        let tr = TrajectoryField::constant(&PhysicalField::zeros(g), vec![0.0]).unwrap();
        assert!(mixed_norm(&tr, [Var::X, Var::X, Var::Y], [e(2.0); 3]).is_err());
        assert!(Exponent::new(0.5).is_err());
        assert!(TrajectoryField::constant(&PhysicalField::zeros(g), vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let g = make_grid(PI, PI, 32, 32).unwrap();
        let f = PhysicalField::from_fn(g, |x, _| (2.0 * x).cos());
        let plain = weighted_sobolev_norm(&f, 0.0, 0.0, 0.0, false, false).unwrap();
        assert!((plain - f.l2_norm()).abs() < 1e-13);
        let d = weighted_sobolev_norm(&f, 1.0, 0.0, 0.0, true, false).unwrap();
        assert!((d - 2.0 * f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn weight_barely_changes_localized_bump() {
        // Oracle: direct quadrature of the Gaussian against the weight.
        let g = make_grid(8.0, 8.0, 128, 128).unwrap();
        let w = 0.5;
        let f = PhysicalField::from_fn(g, |x, y| (-(x * x + y * y) / (w * w)).exp());
        let a0 = weighted_sobolev_norm(&f, 0.0, 0.0, 0.0, false, false).unwrap();
        let a1 = weighted_sobolev_norm(&f, 0.0, 0.0, 1.0, false, false).unwrap();
        assert!(a1 >= a0 && a1 <= 1.1 * a0, "{a0} {a1}");
        let direct: f64 = f
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| v * v * (1.0 + g.y(k % 128).powi(2)))
            .sum::<f64>()
            * g.dx()
            * g.dy();
        assert!((a1 - direct.sqrt()).abs() < 1e-12 * a1);
    }

    #[test]
    fn z0_exponents_and_support() {
        let e = Z0Exponents::new(0.05);
        assert!((e.sigma[2] - 0.8).abs() < 1e-15);
        assert!((e.gamma[2] - 1.55).abs() < 1e-15);
        let g = make_grid(4.0 * PI, 4.0 * PI, 64, 64).unwrap();
        let zero = z0_norm(&PhysicalField::zeros(g), 0.05).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.components.iter().all(|c| c.value == 0.0));
        let f = smooth_field(g, 9);
        let high = apply_chain(&f, &[Symbol::Q]).unwrap();
        let low = apply_chain(&f, &[Symbol::Low]).unwrap();
        let zh = z0_norm_spectral(&high, 0.05).unwrap();
        for n in ["low_0", "low_1", "low_2"] {
            assert_eq!(zh.component(n), Some(0.0));
        }
        let zl = z0_norm_spectral(&low, 0.05).unwrap();
        for n in ["high_3", "high_4", "high_5"] {
            assert_eq!(zl.component(n), Some(0.0));
        }
        assert!(zl.component("low_0").unwrap() > 0.0);
        assert_eq!(zh.components.len(), 7);
    }

    #[test]
    fn y0_exponents_and_q_fields() {
        let g = make_grid(4.0 * PI, 4.0 * PI, 32, 32).unwrap();
        let f = smooth_field(g, 2);
        let high = inverse_transform(&apply_chain(&f, &[Symbol::Q]).unwrap()).unwrap();
        let y = y0_norm(&high, 0.05).unwrap();
        assert!(y.value < 1e-13 * high.l2_norm());
        assert_eq!(y0_norm(&PhysicalField::zeros(g), 0.05).unwrap().value, 0.0);
        let low = inverse_transform(&apply_chain(&f, &[Symbol::Low]).unwrap()).unwrap();
        let y = y0_norm(&low, 0.05).unwrap();
        assert_eq!(y.components.len(), 4);
        // Oracle for the third component: direct coefficient sum with the written exponents.
        let s = apply_chain(&forward_transform(&low), &[Symbol::Low]).unwrap();
        let mut acc = 0.0;
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let (xi, la) = (g.xi(i), g.lambda(j));
                if xi == 0.0 || la == 0.0 {
                    continue;
                }
                let m = xi.abs().powf(-0.8) * la.abs().powf(1.55);
                acc += (m * s.coeffs()[i * g.ny() + j].norm()).powi(2);
            }
        }
        let want = (acc * g.area()).sqrt();
        assert!((y.component("y0_3").unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn x_norm_examples() {
        let g = make_grid(PI, PI, 32, 32).unwrap();
        let p = XParams::default();
        let z = TrajectoryField::constant(&PhysicalField::zeros(g), times(5, 1.0)).unwrap();
        for i in 1..=12 {
            assert_eq!(x_norm(&z, i, &p).unwrap(), 0.0);
        }
        assert!(x_norm(&z, 0, &p).is_err());
        assert!(x_norm(&z, 13, &p).is_err());
        let f = inverse_transform(&smooth_field(g, 4)).unwrap();
        let c = TrajectoryField::constant(&f, times(5, 1.0)).unwrap();
        let h2 = h2_norm(&forward_transform(&f)).unwrap();
        assert!((x_norm(&c, 1, &p).unwrap() - h2).abs() < 1e-12 * h2);
        let plus = inverse_transform(&apply_chain(&smooth_field(g, 5), &[Symbol::Q, Symbol::PPlus]).unwrap()).unwrap();
        let tp = TrajectoryField::constant(&plus, times(5, 1.0)).unwrap();
        assert!(x_norm(&tp, 5, &p).unwrap() > 0.0);
        assert!(x_norm(&tp, 7, &p).unwrap() < 1e-12);
        // Non-Q-supported input is refused for the smoothing norms.
        let wide = make_grid(4.0 * PI, PI, 32, 32).unwrap();
        let f = inverse_transform(&smooth_field(wide, 4)).unwrap();
        let c = TrajectoryField::constant(&f, times(5, 1.0)).unwrap();
        assert!(x_norm(&c, 5, &p).is_err());
    }

    #[test]
    fn lattice_maximal_examples() {
        let g = make_grid(PI, 8.0, 16, 64).unwrap();
        let one_cell = PhysicalField::from_fn(g, |x, y| if (2.0..3.0).contains(&y) { 1.0 + x.cos() } else { 0.0 });
        let tr = TrajectoryField::constant(&one_cell, vec![0.0, 0.5]).unwrap();
        let v = lattice_maximal_norm(&tr, Direction::YOuter, 0.0).unwrap();
        assert!((v - one_cell.max_abs()).abs() < 1e-14);
        let h = 0.7;
        let flat = PhysicalField::from_fn(g, |_, _| h);
        let tr = TrajectoryField::constant(&flat, vec![0.0]).unwrap();
        let v = lattice_maximal_norm(&tr, Direction::YOuter, 0.0).unwrap();
        assert!((v - h * 16f64.sqrt()).abs() < 1e-13);
        let tiny = make_grid(0.25, 0.25, 8, 8).unwrap();
        let tr = TrajectoryField::constant(&PhysicalField::zeros(tiny), vec![0.0]).unwrap();
        assert!(lattice_maximal_norm(&tr, Direction::XOuter, 0.0).is_err());
    }

    #[test]
    fn spec_record_roundtrip() {
        let g = make_grid(PI, 4.0, 16, 32).unwrap();
        let f = inverse_transform(&smooth_field(g, 1)).unwrap();
        let tr = TrajectoryField::constant(&f, vec![0.0, 1.0]).unwrap();
        let spec = NormSpec::MixedLebesgue { order: [Var::X, Var::T, Var::Y], exponents: [e(f64::INFINITY), e(2.0), e(2.0)] };
        let rec = spec.record(&tr).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"inf\""));
        let back: NormRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }

    fn field_pair() -> impl Strategy<Value = (TrajectoryField, TrajectoryField)> {
        (any::<u64>(), any::<u64>()).prop_map(|(a, b)| {
            let g = make_grid(4.0 * PI, 4.0, 16, 16).unwrap();
            let mk = |s: u64| {
                let f = apply_chain(&smooth_field(g, s), &[Symbol::Q]).unwrap();
                let h = apply_chain(&smooth_field(g, s ^ 77), &[Symbol::Q, Symbol::Dx]).unwrap();
                let fs = vec![inverse_transform(&f).unwrap(), inverse_transform(&h).unwrap()];
                TrajectoryField::new(vec![0.0, 0.5], fs).unwrap()
            };
            (mk(a), mk(b))
        })
    }

    fn all_specs() -> Vec<NormSpec> {
        let p = XParams::default();
        let mut v: Vec<NormSpec> = (1..=12).map(|i| NormSpec::X { i, params: p }).collect();
        v.push(NormSpec::MixedLebesgue { order: [Var::Y, Var::T, Var::X], exponents: [e(3.0), e(2.0), e(f64::INFINITY)] });
        v.push(NormSpec::WeightedSobolev { sigma: 0.3, gamma: 1.2, alpha: 0.55, dotted_x: true, dotted_y: false });
        v.push(NormSpec::Z0 { epsilon: 0.05 });
        v.push(NormSpec::Z0Split { epsilon: 0.05 });
        v.push(NormSpec::YSet { params: p });
        v.push(NormSpec::X0 { params: p });
        v.push(NormSpec::LatticeMaximal { direction: Direction::XOuter, alpha: 0.55 });
        v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn homogeneous_and_subadditive((f, g) in field_pair()) {
            for spec in all_specs() {
                let nf = spec.evaluate(&f).map_err(|e| TestCaseError::fail(format!("{spec:?}: {e}")))?.value;
                for c in [-2.0, 0.5, 10.0] {
                    let nc = spec.evaluate(&f.scale(c)).unwrap().value;
                    prop_assert!((nc - c.abs() * nf).abs() <= 1e-12 * nc.abs().max(1e-300), "{:?}", spec);
                }
                let ng = spec.evaluate(&g).unwrap().value;
                let nfg = spec.evaluate(&f.add(&g).unwrap()).unwrap().value;
                prop_assert!(nfg <= nf + ng + 1e-10, "{:?}", spec);
                prop_assert!(nf > 0.0);
            }
        }
    }
}
