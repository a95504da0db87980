//! Two-sided heat kernel estimates: the closed regime-dependent formula, the
//! unified integral form, the two-jump ball integral and a dominance map.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DklError, DklResult};
use crate::geometry::{
    distance, lift_ed, lifted_weight, stable_factor, survival_factor, BoundaryWeight, HalfSpacePoint, ModelParams,
    Regime,
};
use crate::killing::solve_q;
use crate::quadrature::{integrate, integrate_with_breaks, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateBreakdown {
    pub regime: Regime,
    pub stable: f64,
    pub one_jump: f64,
    pub two_jump: f64,
    pub free_value: f64,
    pub survival_x: f64,
    pub survival_y: f64,
    pub killed_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    OneJump,
    TwoJump,
}

impl Dominance {
    pub fn name(self) -> &'static str {
        match self {
            Dominance::OneJump => "one-jump",
            Dominance::TwoJump => "two-jump",
        }
    }
}

/// Closed-form estimator for a fixed model and boundary decay exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelEstimator {
    pub params: ModelParams,
    pub q: f64,
    /// Half-width of the band `|beta2 - alpha - beta1| <= critical_tol` treated
    /// as the critical regime.
    pub critical_tol: f64,
}

fn check_pair(d: usize, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<()> {
    for p in [x, y] {
        if p.dim() != d {
            return Err(DklError::Dimension { expected: d, got: p.dim() });
        }
    }
    Ok(())
}

fn check_time(t: f64) -> DklResult<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(DklError::domain(format!("time t = {t} must be positive")));
    }
    Ok(())
}

impl HeatKernelEstimator {
    pub fn new(params: ModelParams, q: f64) -> DklResult<Self> {
        params.validate()?;
        if !(q >= 0.0) || !q.is_finite() {
            return Err(DklError::domain(format!("boundary exponent q = {q} must be >= 0")));
        }
        Ok(HeatKernelEstimator { params, q, critical_tol: 0.0 })
    }

    /// Solves `C(alpha, q, w) = kappa` for `q`.
    pub fn from_kappa(params: ModelParams, w: &dyn BoundaryWeight, spec: &QuadratureSpec) -> DklResult<Self> {
        params.validate()?;
        let sol = solve_q(params.alpha, params.kappa, w, params.d, spec)?;
        Self::new(params, sol.q)
    }

    pub fn with_critical_tol(mut self, tol: f64) -> Self {
        self.critical_tol = tol.max(0.0);
        self
    }

    pub fn regime(&self) -> Regime {
        self.params.regime(self.critical_tol)
    }

    pub fn closed(&self, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<EstimateBreakdown> {
        let p = &self.params;
        check_pair(p.d, x, y)?;
        check_time(t)?;
        let regime = self.regime();
        let tau = p.time_scale(t);
        let r = distance(x, y);
        let stable = stable_factor(p.d, p.alpha, t, r);
        let survival_x = survival_factor(p.alpha, self.q, t, x.height());
        let survival_y = survival_factor(p.alpha, self.q, t, y.height());
        let on_diagonal = stable_factor(p.d, p.alpha, t, 0.0);
        if r == 0.0 {
            return Ok(EstimateBreakdown {
                regime,
                stable,
                one_jump: 1.0,
                two_jump: 0.0,
                free_value: on_diagonal,
                survival_x,
                survival_y,
                killed_value: survival_x * survival_y * on_diagonal,
            });
        }
        let b = p.beta;
        let one_jump = lifted_weight(&b, tau, x, y);
        let two_jump = match regime {
            Regime::OneJump => 0.0,
            Regime::TwoJumpStrict | Regime::Critical => {
                let last = if regime == Regime::Critical { b[2] + b[3] + 1.0 } else { b[2] };
                let lo = x.height().min(y.height()) + tau;
                let log_factor = if b[2] == 0.0 { 1.0 } else { (E + r / lo.min(r)).ln().powf(b[2]) };
                (t / r.powf(p.alpha)).min(1.0) * lifted_weight(&[b[0], b[0], 0.0, last], tau, x, y) * log_factor
            }
        };
        let free_value = (stable * (one_jump + two_jump)).min(on_diagonal);
        Ok(EstimateBreakdown {
            regime,
            stable,
            one_jump,
            two_jump,
            free_value,
            survival_x,
            survival_y,
            killed_value: survival_x * survival_y * free_value,
        })
    }

    pub fn killed(&self, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
        self.closed(t, x, y).map(|e| e.killed_value)
    }

    /// Which bracket term of the closed form is larger at each `y`.
    pub fn dominance_map(
        &self,
        t: f64,
        x: &HalfSpacePoint,
        ys: &[HalfSpacePoint],
    ) -> DklResult<Vec<(EstimateBreakdown, Dominance)>> {
        ys.iter()
            .map(|y| {
                let e = self.closed(t, x, y)?;
                let tag = if e.two_jump > e.one_jump { Dominance::TwoJump } else { Dominance::OneJump };
                Ok((e, tag))
            })
            .collect()
    }
}

/// Closed-form estimate (free and killed parts) for a supplied `q`.
pub fn hke_closed(
    p: &ModelParams,
    q: f64,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> DklResult<EstimateBreakdown> {
    HeatKernelEstimator::new(*p, q)?.closed(t, x, y)
}

pub fn killed_hke(p: &ModelParams, q: f64, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    hke_closed(p, q, t, x, y).map(|e| e.killed_value)
}

fn jump(w: &dyn BoundaryWeight, d: usize, alpha: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    let r = distance(x, y);
    w.evaluate(x, y) * r.powf(-(d as f64 + alpha))
}

/// The unified form
/// `t^{-d/α} ∧ [t J(x̂, ŷ) + 1{β2 ≥ α+β1} t² ∫_{ℓ}^{r/2} J(x̂, x̂+ρe_d) J(x̂+ρe_d, ŷ) ρ^{d-1} dρ]`
/// with `x̂ = x + t^{1/α} e_d`, `ℓ = (x_d ∨ y_d ∨ t^{1/α}) ∧ (r/4)`.
pub fn hke_unified(
    p: &ModelParams,
    w: &dyn BoundaryWeight,
    critical_tol: f64,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    p.validate()?;
    check_pair(p.d, x, y)?;
    check_time(t)?;
    let d = p.d;
    let tau = p.time_scale(t);
    let on_diagonal = stable_factor(d, p.alpha, t, 0.0);
    let r = distance(x, y);
    if r == 0.0 {
        return Ok(on_diagonal);
    }
    let xh = lift_ed(x, tau);
    let yh = lift_ed(y, tau);
    let mut value = t * jump(w, d, p.alpha, &xh, &yh);
    if p.regime(critical_tol) != Regime::OneJump {
        value += t * t * vertical_path_integral(p, w, t, x, y, spec)?;
    }
    Ok(value.min(on_diagonal))
}

/// Closed form of the two-jump ball contribution:
/// `(1 ∧ t/r^α) B_{β1,β1,0,β3}(x̂, ŷ) log^{β3}(e + r/(((x_d ∧ y_d) + t^{1/α}) ∧ r))`.
pub fn ball_closed(p: &ModelParams, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    check_pair(p.d, x, y)?;
    check_time(t)?;
    let r = distance(x, y);
    if r == 0.0 {
        return Err(DklError::CoincidentPoints);
    }
    let tau = p.time_scale(t);
    let b = p.beta;
    let lo = x.height().min(y.height()) + tau;
    let log_factor = if b[2] == 0.0 { 1.0 } else { (E + r / lo.min(r)).ln().powf(b[2]) };
    Ok((t / r.powf(p.alpha)).min(1.0) * lifted_weight(&[b[0], b[0], 0.0, b[2]], tau, x, y) * log_factor)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallMode {
    Quadrature(QuadratureSpec),
    /// Plain Monte Carlo with uniform points in the ball.
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

/// `t r^{d+α} ∫_{B(x + (r/2) e_d, r/4)} J(x̂, z) J(z, ŷ) dz` for `r > 6 t^{1/α}`.
pub fn twojump_ball_integral(
    p: &ModelParams,
    w: &dyn BoundaryWeight,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    mode: BallMode,
) -> DklResult<f64> {
    p.validate()?;
    check_pair(p.d, x, y)?;
    check_time(t)?;
    let d = p.d;
    let tau = p.time_scale(t);
    let r = distance(x, y);
    if !(r > 6.0 * tau) {
        return Err(DklError::domain(format!("ball integral needs |x - y| > 6 t^(1/alpha); got {r} vs {tau}")));
    }
    let xh = lift_ed(x, tau);
    let yh = lift_ed(y, tau);
    let centre = lift_ed(x, r / 2.0);
    let radius = r / 4.0;
    let f = |z: &HalfSpacePoint| jump(w, d, p.alpha, &xh, z) * jump(w, d, p.alpha, z, &yh);
    let integral = ball_integrate(&f, &centre, radius, mode)?;
    Ok(t * r.powf(d as f64 + p.alpha) * integral)
}

pub(crate) fn ball_volume(d: usize, radius: f64) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / statrs::function::gamma::gamma(h + 1.0) * radius.powi(d as i32)
}

/// `∫_{B(centre, radius)} f`, for dimensions one to three by iterated
/// quadrature in polar coordinates, any dimension by Monte Carlo.
pub fn ball_integrate<F: Fn(&HalfSpacePoint) -> f64>(
    f: &F,
    centre: &HalfSpacePoint,
    radius: f64,
    mode: BallMode,
) -> DklResult<f64> {
    let d = centre.dim();
    let c = centre.coords();
    let point = |offset: &[f64]| HalfSpacePoint::new(c.iter().zip(offset).map(|(a, b)| a + b).collect());
    match mode {
        BallMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(DklError::domain("Monte Carlo needs at least one sample"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sum = 0.0;
            let mut offset = vec![0.0; d];
            let mut drawn = 0;
            while drawn < samples {
                for o in offset.iter_mut() {
                    *o = radius * (2.0 * rng.gen::<f64>() - 1.0);
                }
                if offset.iter().map(|o| o * o).sum::<f64>() > radius * radius {
                    continue;
                }
                sum += f(&point(&offset)?);
                drawn += 1;
            }
            Ok(ball_volume(d, radius) * sum / samples as f64)
        }
        BallMode::Quadrature(spec) => {
            let inner = spec.inner(0.1);
            let mut fail: Option<DklError> = None;
            let mut eval = |offset: &[f64]| match point(offset) {
                Ok(z) => f(&z),
                Err(e) => {
                    fail.get_or_insert(e);
                    0.0
                }
            };
            let value = match d {
                1 => integrate(|u| eval(&[u]), -radius, radius, &spec)?.value,
                2 => {
                    let mut inner_fail = None;
                    let v = integrate(
                        |rho| match integrate(|phi| eval(&[rho * phi.cos(), rho * phi.sin()]), 0.0, 2.0 * PI, &inner) {
                            Ok(q) => rho * q.value,
                            Err(e) => {
                                inner_fail.get_or_insert(e);
                                0.0
                            }
                        },
                        0.0,
                        radius,
                        &spec,
                    )?
                    .value;
                    if let Some(e) = inner_fail {
                        return Err(e);
                    }
                    v
                }
                3 => {
                    let inner2 = inner.inner(0.1);
                    let mut inner_fail = None;
                    let v = integrate(
                        |rho| {
                            let polar = integrate(
                                |theta| {
                                    let (st, ct) = theta.sin_cos();
                                    match integrate(
                                        |phi| eval(&[rho * st * phi.cos(), rho * st * phi.sin(), rho * ct]),
                                        0.0,
                                        2.0 * PI,
                                        &inner2,
                                    ) {
                                        Ok(q) => st * q.value,
                                        Err(e) => {
                                            inner_fail.get_or_insert(e);
                                            0.0
                                        }
                                    }
                                },
                                0.0,
                                PI,
                                &inner,
                            );
                            match polar {
                                Ok(q) => rho * rho * q.value,
                                Err(e) => {
                                    inner_fail.get_or_insert(e);
                                    0.0
                                }
                            }
                        },
                        0.0,
                        radius,
                        &spec,
                    )?
                    .value;
                    if let Some(e) = inner_fail {
                        return Err(e);
                    }
                    v
                }
                _ => {
                    return Err(DklError::Unsupported(format!(
                        "quadrature over a ball in dimension {d}; use Monte Carlo"
                    )))
                }
            };
            if let Some(e) = fail {
                return Err(e);
            }
            Ok(value)
        }
    }
}

/// `∫_{ℓ}^{r/2}` of the product of the two lifted jump kernels along the
/// vertical path, without the `t²` factor; exposed for diagnostics.
pub fn vertical_path_integral(
    p: &ModelParams,
    w: &dyn BoundaryWeight,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    check_pair(p.d, x, y)?;
    let tau = p.time_scale(t);
    let r = distance(x, y);
    let xh = lift_ed(x, tau);
    let yh = lift_ed(y, tau);
    let lower = x.height().max(y.height()).max(tau).min(r / 4.0);
    let upper = r / 2.0;
    let d = p.d;
    // in ln ρ, split where the height and distance minima of the weights switch
    let mut points = vec![lower.ln()];
    for b in [xh.height(), (yh.height() - xh.height()).abs(), x.height(), y.height(), tau] {
        if b > lower && b < upper {
            points.push(b.ln());
        }
    }
    points.push(upper.ln());
    Ok(integrate_with_breaks(
        |v| {
            let rho = v.exp();
            let z = lift_ed(&xh, rho);
            jump(w, d, p.alpha, &xh, &z) * jump(w, d, p.alpha, &z, &yh) * rho.powi(d as i32)
        },
        &points,
        spec,
    )?
    .value)
}
