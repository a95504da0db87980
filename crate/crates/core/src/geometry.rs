//! Points of the closed upper half-space, model parameters and the boundary
//! weights `B_beta`, `A_beta` together with the elementary kernel factors.
//!
//! The last coordinate of a point is its height above the boundary.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use crate::error::{DklError, DklResult};

#[derive(Clone, PartialEq)]
pub struct HalfSpacePoint {
    coords: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(coords: Vec<f64>) -> DklResult<Self> {
        if coords.is_empty() {
            return Err(DklError::domain("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(DklError::domain("coordinates must be finite"));
        }
        if *coords.last().unwrap() < 0.0 {
            return Err(DklError::domain("height must be non-negative"));
        }
        Ok(HalfSpacePoint { coords })
    }

    pub fn from_parts(tangential: &[f64], height: f64) -> DklResult<Self> {
        let mut coords = tangential.to_vec();
        coords.push(height);
        Self::new(coords)
    }

    /// The point `(0, ..., 0, height)` in dimension `d`.
    pub fn on_axis(d: usize, height: f64) -> DklResult<Self> {
        if d == 0 {
            return Err(DklError::domain("dimension must be at least 1"));
        }
        let mut coords = vec![0.0; d];
        coords[d - 1] = height;
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn height(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn tangential(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Same tangential part, height replaced.
    pub fn with_height(&self, height: f64) -> HalfSpacePoint {
        let mut coords = self.coords.clone();
        *coords.last_mut().unwrap() = height;
        HalfSpacePoint { coords }
    }

    pub fn scaled(&self, factor: f64) -> HalfSpacePoint {
        HalfSpacePoint { coords: self.coords.iter().map(|c| c * factor).collect() }
    }
}

impl fmt::Debug for HalfSpacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords)
    }
}

/// Vertical lift `x + s e_d`.
pub fn lift_ed(x: &HalfSpacePoint, s: f64) -> HalfSpacePoint {
    x.with_height(x.height() + s)
}

/// Euclidean distance, computed symmetrically in its arguments.
pub fn distance(x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    let scale = x.coords.iter().zip(&y.coords).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = x
        .coords
        .iter()
        .zip(&y.coords)
        .map(|(a, b)| {
            let u = (a - b).abs() / scale;
            u * u
        })
        .sum();
    scale * sum.sqrt()
}

fn same_dim(x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<()> {
    if x.dim() != y.dim() {
        return Err(DklError::Dimension { expected: x.dim(), got: y.dim() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    OneJump,
    TwoJumpStrict,
    Critical,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::OneJump => "one-jump",
            Regime::TwoJumpStrict => "two-jump",
            Regime::Critical => "critical",
        }
    }
}

/// Dimension, stability index, weight exponents and killing intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub beta: [f64; 4],
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, beta: [f64; 4], kappa: f64) -> DklResult<Self> {
        let p = ModelParams { d, alpha, beta, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> DklResult<()> {
        if self.d == 0 {
            return Err(DklError::domain("dimension must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(DklError::domain(format!("alpha = {} outside (0, 2)", self.alpha)));
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(DklError::domain(format!("kappa = {} must be >= 0", self.kappa)));
        }
        check_admissible(&self.beta)
    }

    /// Threshold for `beta2` separating the one-jump and two-jump regimes.
    pub fn critical_beta2(&self) -> f64 {
        self.alpha + self.beta[0]
    }

    pub fn regime(&self, critical_tol: f64) -> Regime {
        let gap = self.beta[1] - self.critical_beta2();
        if gap.abs() <= critical_tol {
            Regime::Critical
        } else if gap < 0.0 {
            Regime::OneJump
        } else {
            Regime::TwoJumpStrict
        }
    }

    /// `t^{1/alpha}`.
    pub fn time_scale(&self, t: f64) -> f64 {
        t.powf(1.0 / self.alpha)
    }
}

pub fn check_admissible(b: &[f64; 4]) -> DklResult<()> {
    if b.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(DklError::Inadmissible { beta: *b, reason: "exponents must be finite and non-negative" });
    }
    if b[2] > 0.0 && b[0] == 0.0 {
        return Err(DklError::Inadmissible { beta: *b, reason: "beta3 > 0 requires beta1 > 0" });
    }
    if b[3] > 0.0 && b[1] == 0.0 {
        return Err(DklError::Inadmissible { beta: *b, reason: "beta4 > 0 requires beta2 > 0" });
    }
    Ok(())
}

/// The weight on the effective heights `lo <= hi` at separation `r`.
///
/// Factors with a zero exponent are skipped, which fixes `0^0 = 1` and keeps
/// the logarithms away from `0/0` on the boundary.
pub(crate) fn weight(b: &[f64; 4], lo: f64, hi: f64, r: f64) -> f64 {
    if (b[0] > 0.0 && lo == 0.0) || (b[1] > 0.0 && hi == 0.0) {
        return 0.0;
    }
    if r == 0.0 {
        return (E + 1.0).ln().powf(b[2] + b[3]);
    }
    let mut v = 1.0;
    if b[0] != 0.0 {
        v *= (lo / r).min(1.0).powf(b[0]);
    }
    if b[1] != 0.0 {
        v *= (hi / r).min(1.0).powf(b[1]);
    }
    if b[2] != 0.0 {
        v *= (E + hi.min(r) / lo.min(r)).ln().powf(b[2]);
    }
    if b[3] != 0.0 {
        v *= (E + r / hi.min(r)).ln().powf(b[3]);
    }
    v
}

/// `ln(e + e^x)` without overflow.
pub(crate) fn ln_e_plus_exp(x: f64) -> f64 {
    if x <= 1.0 {
        1.0 + (x - 1.0).exp().ln_1p()
    } else {
        x + (1.0 - x).exp().ln_1p()
    }
}

/// Logarithm of [`weight`] from logarithms of its arguments, for heights far
/// outside the floating point range.
pub(crate) fn ln_weight(b: &[f64; 4], ln_lo: f64, ln_hi: f64, ln_r: f64) -> f64 {
    if (b[0] > 0.0 && ln_lo == f64::NEG_INFINITY) || (b[1] > 0.0 && ln_hi == f64::NEG_INFINITY) {
        return f64::NEG_INFINITY;
    }
    let mut v = 0.0;
    if b[0] != 0.0 {
        v += b[0] * (ln_lo - ln_r).min(0.0);
    }
    if b[1] != 0.0 {
        v += b[1] * (ln_hi - ln_r).min(0.0);
    }
    if b[2] != 0.0 {
        v += b[2] * ln_e_plus_exp(ln_hi.min(ln_r) - ln_lo.min(ln_r)).ln();
    }
    if b[3] != 0.0 {
        v += b[3] * ln_e_plus_exp(ln_r - ln_hi.min(ln_r)).ln();
    }
    v
}

fn ordered_heights(x: &HalfSpacePoint, y: &HalfSpacePoint) -> (f64, f64) {
    let (a, b) = (x.height(), y.height());
    (a.min(b), a.max(b))
}

/// `B_b(x, y)` for distinct points of the closed half-space.
pub fn eval_b(b: &[f64; 4], x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    check_admissible(b)?;
    same_dim(x, y)?;
    let r = distance(x, y);
    if r == 0.0 {
        return Err(DklError::CoincidentPoints);
    }
    let (lo, hi) = ordered_heights(x, y);
    Ok(weight(b, lo, hi, r))
}

/// `A_b(t, x, y)`: `B_b` with each height replaced by `height ∨ t^{1/alpha}`.
pub fn eval_a(b: &[f64; 4], alpha: f64, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    check_admissible(b)?;
    same_dim(x, y)?;
    if !(t >= 0.0) {
        return Err(DklError::domain("time must be non-negative"));
    }
    let r = distance(x, y);
    if r == 0.0 && t == 0.0 {
        return Err(DklError::CoincidentPoints);
    }
    Ok(a_weight(b, alpha, t, x, y))
}

/// Unchecked `A_b`; exponents need not be admissible when `t > 0`.
pub(crate) fn a_weight(b: &[f64; 4], alpha: f64, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    let tau = if t == 0.0 { 0.0 } else { t.powf(1.0 / alpha) };
    let (lo, hi) = ordered_heights(x, y);
    weight(b, lo.max(tau), hi.max(tau), distance(x, y))
}

/// Unchecked `B_b(x + s e_d, y + s e_d)`.
pub(crate) fn lifted_weight(b: &[f64; 4], s: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    let (lo, hi) = ordered_heights(x, y);
    weight(b, lo + s, hi + s, distance(x, y))
}

/// `min(t^{-d/alpha}, t r^{-d-alpha})`; the on-diagonal value when `r = 0`.
pub fn stable_factor(d: usize, alpha: f64, t: f64, r: f64) -> f64 {
    let tau = t.powf(1.0 / alpha);
    let on_diagonal = 1.0 / tau.powi(d as i32);
    if r == 0.0 {
        return on_diagonal;
    }
    on_diagonal.min(t * r.powf(-(d as f64 + alpha)))
}

/// `(1 ∧ h / t^{1/alpha})^q`.
pub fn survival_factor(alpha: f64, q: f64, t: f64, h: f64) -> f64 {
    if q == 0.0 {
        return 1.0;
    }
    (h / t.powf(1.0 / alpha)).min(1.0).powf(q)
}

/// Which of the structural assumptions on a weight the implementer vouches for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightAssumptions {
    pub symmetric_bounded: bool,
    pub tangential_invariance: bool,
    pub upper_bound: bool,
    pub lower_bound: bool,
}

impl WeightAssumptions {
    pub const ALL: WeightAssumptions = WeightAssumptions {
        symmetric_bounded: true,
        tangential_invariance: true,
        upper_bound: true,
        lower_bound: true,
    };
}

/// `s` and `1 - s` on the unit interval, each kept to full relative precision
/// together with their logarithms.
#[derive(Debug, Clone, Copy)]
pub struct UnitSplit {
    pub s: f64,
    pub one_minus_s: f64,
    pub ln_s: f64,
    pub ln_one_minus_s: f64,
}

impl UnitSplit {
    /// From `u = -ln s`.
    pub fn from_neg_ln_s(u: f64) -> Self {
        let s = (-u).exp();
        let one_minus_s = -(-u).exp_m1();
        UnitSplit { s, one_minus_s, ln_s: -u, ln_one_minus_s: (-s).ln_1p() }
    }

    /// From `v = -ln(1 - s)`.
    pub fn from_neg_ln_one_minus_s(v: f64) -> Self {
        let one_minus_s = (-v).exp();
        let s = -(-v).exp_m1();
        UnitSplit { s, one_minus_s, ln_s: (-one_minus_s).ln_1p(), ln_one_minus_s: -v }
    }

    pub fn from_s(s: f64) -> Self {
        UnitSplit { s, one_minus_s: 1.0 - s, ln_s: s.ln(), ln_one_minus_s: (-s).ln_1p() }
    }
}

/// A jump-kernel weight `B(x, y)`; the jump kernel is `B(x, y) |x - y|^{-d-alpha}`.
pub trait BoundaryWeight: Send + Sync {
    /// Exponents of the two-sided power-log bound the weight satisfies.
    fn beta(&self) -> [f64; 4];

    fn assumptions(&self) -> WeightAssumptions;

    /// Whether `B` depends on the tangential separation only through its norm.
    fn tangentially_isotropic(&self) -> bool;

    fn evaluate(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64;

    /// `ln B(((1 - s) u, 1), (0, s))` where `u` is a tangential vector
    /// (empty in dimension one).
    fn ln_killing_pair(&self, u: &[f64], split: &UnitSplit) -> f64 {
        let tangential: Vec<f64> = u.iter().map(|c| c * split.one_minus_s).collect();
        let x = HalfSpacePoint { coords: tangential.iter().copied().chain([1.0]).collect() };
        let y = HalfSpacePoint { coords: vec![0.0; u.len()].into_iter().chain([split.s]).collect() };
        self.evaluate(&x, &y).ln()
    }
}

/// The canonical weight `B_beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLogWeight {
    beta: [f64; 4],
}

impl PowerLogWeight {
    pub fn new(beta: [f64; 4]) -> DklResult<Self> {
        check_admissible(&beta)?;
        Ok(PowerLogWeight { beta })
    }
}

impl BoundaryWeight for PowerLogWeight {
    fn beta(&self) -> [f64; 4] {
        self.beta
    }

    fn assumptions(&self) -> WeightAssumptions {
        WeightAssumptions::ALL
    }

    fn tangentially_isotropic(&self) -> bool {
        true
    }

    fn evaluate(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
        let (lo, hi) = ordered_heights(x, y);
        weight(&self.beta, lo, hi, distance(x, y))
    }

    fn ln_killing_pair(&self, u: &[f64], split: &UnitSplit) -> f64 {
        let u2: f64 = u.iter().map(|c| c * c).sum();
        let ln_r = split.ln_one_minus_s + 0.5 * u2.ln_1p();
        ln_weight(&self.beta, split.ln_s, 0.0, ln_r)
    }
}

type WeightFn = dyn Fn(&HalfSpacePoint, &HalfSpacePoint) -> f64 + Send + Sync;

/// A user supplied weight backed by a closure.
#[derive(Clone)]
pub struct FnWeight {
    beta: [f64; 4],
    assumptions: WeightAssumptions,
    isotropic: bool,
    f: Arc<WeightFn>,
}

impl FnWeight {
    pub fn new<F>(beta: [f64; 4], isotropic: bool, f: F) -> DklResult<Self>
    where
        F: Fn(&HalfSpacePoint, &HalfSpacePoint) -> f64 + Send + Sync + 'static,
    {
        check_admissible(&beta)?;
        Ok(FnWeight { beta, assumptions: WeightAssumptions::ALL, isotropic, f: Arc::new(f) })
    }

    pub fn with_assumptions(mut self, assumptions: WeightAssumptions) -> Self {
        self.assumptions = assumptions;
        self
    }
}

impl fmt::Debug for FnWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnWeight").field("beta", &self.beta).field("isotropic", &self.isotropic).finish()
    }
}

impl BoundaryWeight for FnWeight {
    fn beta(&self) -> [f64; 4] {
        self.beta
    }

    fn assumptions(&self) -> WeightAssumptions {
        self.assumptions
    }

    fn tangentially_isotropic(&self) -> bool {
        self.isotropic
    }

    fn evaluate(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
        (self.f)(x, y)
    }
}

/// Jump kernel `J(x, y) = B(x, y) |x - y|^{-d-alpha}`.
pub fn eval_j(w: &dyn BoundaryWeight, alpha: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    same_dim(x, y)?;
    let r = distance(x, y);
    if r == 0.0 {
        return Err(DklError::CoincidentPoints);
    }
    Ok(w.evaluate(x, y) * r.powf(-(x.dim() as f64 + alpha)))
}
