//! Green function estimates: the free kernel, the closed killed estimate with
//! its phase transition at `q = α + (β1+β2)/2`, and a check of the latter by
//! integrating the heat kernel estimate in time.

use std::f64::consts::E;

use crate::error::{DklError, DklResult};
use crate::geometry::{distance, HalfSpacePoint, ModelParams};
use crate::hke::HeatKernelEstimator;
use crate::quadrature::{integrate_with_breaks_scaled, QuadratureSpec};

/// Which branch of the closed form applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenCase {
    /// `q < α + (β1+β2)/2` (equivalently `q < q̂`).
    BelowThreshold,
    AtThreshold,
    AboveThreshold,
    /// `d = 1` branches.
    LineAlphaBelowOne,
    LineAlphaOne,
    LineAlphaAboveOne,
}

impl GreenCase {
    pub fn name(self) -> &'static str {
        match self {
            GreenCase::BelowThreshold => "below-threshold",
            GreenCase::AtThreshold => "at-threshold",
            GreenCase::AboveThreshold => "above-threshold",
            GreenCase::LineAlphaBelowOne => "line-alpha-lt-1",
            GreenCase::LineAlphaOne => "line-alpha-eq-1",
            GreenCase::LineAlphaAboveOne => "line-alpha-gt-1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenBreakdown {
    pub value: f64,
    /// `H_q(x, y)`; 1 for `d = 1`.
    pub h_factor: f64,
    /// Time integral over `(0, 1]` after scaling to `|x - y| = 1` (the
    /// comparable closed form for [`green_estimate`]).
    pub small_time: f64,
    /// Time integral over `[1, ∞)` after scaling.
    pub large_time: f64,
    pub q_hat: f64,
    pub case: GreenCase,
}

/// Position of `q` relative to `α + (β1+β2)/2`, with a relative band of a
/// few ulps counted as equality.
fn threshold_side(p: &ModelParams, q: f64) -> std::cmp::Ordering {
    let threshold = p.alpha + 0.5 * (p.beta[0] + p.beta[1]);
    if (q - threshold).abs() <= 1e-12 * threshold.max(1.0) {
        std::cmp::Ordering::Equal
    } else {
        q.total_cmp(&threshold)
    }
}

fn check_points(p: &ModelParams, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    for z in [x, y] {
        if z.dim() != p.d {
            return Err(DklError::Dimension { expected: p.d, got: z.dim() });
        }
    }
    let r = distance(x, y);
    if r == 0.0 {
        return Err(DklError::CoincidentPoints);
    }
    Ok(r)
}

fn clamp_ratio(h: f64, r: f64) -> f64 {
    (h / r).min(1.0)
}

fn pow_or_one(base: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        base.powf(e)
    }
}

/// `H_q(x, y)`.
pub fn eval_hq(p: &ModelParams, q: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    p.validate()?;
    let r = check_points(p, x, y)?;
    let hi = x.height().max(y.height());
    let log = (E + r / hi.min(r)).ln();
    let b4 = p.beta[3];
    Ok(match threshold_side(p, q) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => log.powf(b4 + 1.0),
        std::cmp::Ordering::Greater => {
            let e = 2.0 * p.alpha + p.beta[0] + p.beta[1] - 2.0 * q;
            clamp_ratio(hi, r).powf(e) * pow_or_one(log, b4)
        }
    })
}

/// `|x - y|^{α-d}` for `d > α`, otherwise `+∞`.
pub fn green_free(p: &ModelParams, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    p.validate()?;
    let r = check_points(p, x, y)?;
    let d = p.d as f64;
    if d <= p.alpha {
        return Ok(f64::INFINITY);
    }
    Ok(r.powf(p.alpha - d))
}

/// Closed-form bounds for the two halves of the scaled time integral, with
/// `x_d <= y_d` and `|x - y| = 1`.
fn lemma_parts(p: &ModelParams, q: f64, q_hat: f64, xd: f64, yd: f64) -> (f64, f64) {
    let (xd, yd) = (xd.min(yd), xd.max(yd));
    let (xc, yc) = (xd.min(1.0), yd.min(1.0));
    let log = (E + 1.0 / yc).ln();
    let base = pow_or_one(xc, q) * pow_or_one(yc, q);
    let b4 = p.beta[3];
    let small = match threshold_side(p, q) {
        std::cmp::Ordering::Less => base,
        std::cmp::Ordering::Equal => base * log.powf(b4 + 1.0),
        std::cmp::Ordering::Greater => pow_or_one(xc, q) * yc.powf(q_hat) * pow_or_one(log, b4),
    };
    let d = p.d as f64;
    let large = if d > p.alpha {
        base
    } else if p.alpha == 1.0 {
        base * (E + xd.max(1.0)).ln()
    } else {
        base * xd.max(1.0).powf(p.alpha - 1.0)
    };
    (small, large)
}

/// Closed-form Green function estimate for boundary exponent `q`.
pub fn green_estimate(p: &ModelParams, q: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<GreenBreakdown> {
    p.validate()?;
    let r = check_points(p, x, y)?;
    if !(x.height() > 0.0 && y.height() > 0.0) {
        return Err(DklError::domain("Green estimate needs interior points"));
    }
    if !(q >= 0.0) || !q.is_finite() {
        return Err(DklError::domain(format!("boundary exponent q = {q} must be >= 0")));
    }
    if p.alpha <= 1.0 && q == 0.0 {
        return Err(DklError::domain("for alpha <= 1 the killed Green estimate needs q > 0"));
    }
    let q_hat = 2.0 * p.alpha + p.beta[0] + p.beta[1] - q;
    let lo = x.height().min(y.height());
    let hi = x.height().max(y.height());
    let (small_time, large_time) = lemma_parts(p, q, q_hat, lo / r, hi / r);
    if p.d >= 2 {
        let h = eval_hq(p, q, x, y)?;
        let case = match threshold_side(p, q) {
            std::cmp::Ordering::Less => GreenCase::BelowThreshold,
            std::cmp::Ordering::Equal => GreenCase::AtThreshold,
            std::cmp::Ordering::Greater => GreenCase::AboveThreshold,
        };
        let value =
            h * r.powf(p.alpha - p.d as f64) * pow_or_one(clamp_ratio(lo, r), q) * pow_or_one(clamp_ratio(hi, r), q);
        return Ok(GreenBreakdown { value, h_factor: h, small_time, large_time, q_hat, case });
    }
    let a = p.alpha;
    let (value, case) = if a < 1.0 {
        (r.powf(a - 1.0) * pow_or_one(clamp_ratio(lo, r), q), GreenCase::LineAlphaBelowOne)
    } else if a == 1.0 {
        (pow_or_one(clamp_ratio(lo, r), q) * (E + lo.max(r) / r).ln(), GreenCase::LineAlphaOne)
    } else {
        (lo.powf(a - 1.0) * pow_or_one(clamp_ratio(lo, r), q - a + 1.0), GreenCase::LineAlphaAboveOne)
    };
    Ok(GreenBreakdown { value, h_factor: 1.0, small_time, large_time, q_hat, case })
}

/// `∫_u^v s^p ds` for `0 < u <= v`, stable near `p = -1`.
fn power_integral(p: f64, u: f64, v: f64) -> f64 {
    if u >= v {
        return 0.0;
    }
    let e = p + 1.0;
    let l = (v / u).ln();
    if e == 0.0 {
        l
    } else {
        u.powf(e) * (e * l).exp_m1() / e
    }
}

/// `∫_1^∞ α τ^{α-1-d} (1 ∧ a/τ)^q (1 ∧ b/τ)^q dτ`: the scaled estimate for
/// `t >= 1` integrated exactly in `τ = t^{1/α}`.
fn large_time_tail(alpha: f64, d: usize, q: f64, a: f64, b: f64) -> DklResult<f64> {
    let (a, b) = (a.min(b), a.max(b));
    let d = d as f64;
    let last = alpha - 1.0 - d - 2.0 * q;
    if last >= -1.0 {
        return Err(DklError::Divergent(format!("large-time Green integrand behaves like tau^{last:.6} at infinity")));
    }
    let (ua, ub) = (a.max(1.0), b.max(1.0));
    let sum = power_integral(alpha - 1.0 - d, 1.0, ua)
        + pow_or_one(a, q) * power_integral(alpha - 1.0 - d - q, ua, ub)
        + pow_or_one(a * b, q) * ub.powf(last + 1.0) / -(last + 1.0);
    Ok(alpha * sum)
}

/// Integrates the closed heat kernel estimate of `est` over `t ∈ (0, ∞)`.
/// The points are scaled to `|x - y| = 1`; `(0, 1]` is done by quadrature
/// and `[1, ∞)` in closed form.
pub fn green_by_time_integration(
    est: &HeatKernelEstimator,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    spec: &QuadratureSpec,
) -> DklResult<GreenBreakdown> {
    let p = &est.params;
    let r = check_points(p, x, y)?;
    let (xs, ys) = (x.scaled(1.0 / r), y.scaled(1.0 / r));
    let q = est.q;
    let large_time = large_time_tail(p.alpha, p.d, q, xs.height(), ys.height())?;
    let mut points = vec![f64::NEG_INFINITY];
    for h in [xs.height(), ys.height()] {
        let v = p.alpha * h.ln();
        if v < 0.0 && v.is_finite() {
            points.push(v);
        }
    }
    points.push(0.0);
    let mut failure = None;
    let small = integrate_with_breaks_scaled(
        |v| {
            let t = v.exp();
            if t == 0.0 {
                return 0.0;
            }
            match est.killed(t, &xs, &ys) {
                Ok(k) => k * t,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &points,
        1.0,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let small_time = small?.value;
    let q_hat = 2.0 * p.alpha + p.beta[0] + p.beta[1] - q;
    let case = if p.d == 1 {
        if p.alpha < 1.0 {
            GreenCase::LineAlphaBelowOne
        } else if p.alpha == 1.0 {
            GreenCase::LineAlphaOne
        } else {
            GreenCase::LineAlphaAboveOne
        }
    } else {
        match threshold_side(p, q) {
            std::cmp::Ordering::Less => GreenCase::BelowThreshold,
            std::cmp::Ordering::Equal => GreenCase::AtThreshold,
            std::cmp::Ordering::Greater => GreenCase::AboveThreshold,
        }
    };
    let h_factor = if p.d >= 2 { eval_hq(p, q, x, y)? } else { 1.0 };
    Ok(GreenBreakdown {
        value: r.powf(p.alpha - p.d as f64) * (small_time + large_time),
        h_factor,
        small_time,
        large_time,
        q_hat,
        case,
    })
}
