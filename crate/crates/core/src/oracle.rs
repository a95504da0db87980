//! Subordinate killed Brownian motion on the half-space: Brownian motion with
//! a Bessel-type radial part of order `γ`, time-changed by an independent
//! `α/2`-stable subordinator. Its transition density, jump kernel and killing
//! function are computed here by quadrature and serve as ground truth for the
//! closed-form estimates.

use std::f64::consts::PI;

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{DklError, DklResult};
use crate::geometry::{distance, HalfSpacePoint, ModelParams};
use crate::hke::HeatKernelEstimator;
use crate::quadrature::{integrate_with_breaks, integrate_with_breaks_scaled, QuadratureSpec};
use crate::report::{ComparabilityReport, Sidedness};
use crate::special::{ln_bessel_i_scaled, StableSubordinator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub gamma: f64,
    pub dim: usize,
    /// Twice the subordinator index.
    pub alpha: f64,
}

impl OracleParams {
    pub fn new(gamma: f64, dim: usize, alpha: f64) -> DklResult<Self> {
        let p = OracleParams { gamma, dim, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> DklResult<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(DklError::domain(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if self.dim == 0 {
            return Err(DklError::domain("dimension must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(DklError::domain(format!("alpha = {} outside (0, 2)", self.alpha)));
        }
        Ok(())
    }

    pub fn subordinator(&self) -> StableSubordinator {
        StableSubordinator::new(0.5 * self.alpha).expect("alpha validated")
    }

    /// The four-parameter model whose jump kernel is comparable to this one.
    pub fn comparable_model(&self) -> DklResult<ModelParams> {
        let b = self.gamma + 0.5;
        ModelParams::new(self.dim, self.alpha, [b, b, 0.0, 0.0], 0.0)
    }
}

fn check_point(op: &OracleParams, x: &HalfSpacePoint) -> DklResult<()> {
    if x.dim() != op.dim {
        return Err(DklError::Dimension { expected: op.dim, got: x.dim() });
    }
    if !(x.height() > 0.0) {
        return Err(DklError::domain("oracle needs interior points"));
    }
    Ok(())
}

/// `ln` of the radial factor `√(xy)/(2t) I_γ(xy/2t) e^{-(x²+y²)/4t}`.
pub fn ln_radial_density(gamma: f64, t: f64, x: f64, y: f64) -> DklResult<f64> {
    let z = x * y / (2.0 * t);
    let ln_scaled = ln_bessel_i_scaled(gamma, z)?;
    Ok(0.5 * (x * y).ln() - (2.0 * t).ln() + ln_scaled - (x - y).powi(2) / (4.0 * t))
}

/// `ln q^γ(t, x, y)`: radial factor times `d - 1` Gaussian factors.
pub fn ln_killed_bm_density(op: &OracleParams, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    check_point(op, x)?;
    check_point(op, y)?;
    if !(t > 0.0) {
        return Err(DklError::domain("time must be positive"));
    }
    let mut v = ln_radial_density(op.gamma, t, x.height(), y.height())?;
    if op.dim > 1 {
        let sq: f64 = x.tangential().iter().zip(y.tangential()).map(|(a, b)| (a - b).powi(2)).sum();
        v -= 0.5 * (op.dim - 1) as f64 * (4.0 * PI * t).ln() + sq / (4.0 * t);
    }
    Ok(v)
}

pub fn killed_bm_density(op: &OracleParams, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> DklResult<f64> {
    ln_killed_bm_density(op, t, x, y).map(f64::exp)
}

/// Density of `S_t` at `s` for the stable subordinator of index `a`.
pub fn stable_density(a: f64, t: f64, s: f64) -> DklResult<f64> {
    StableSubordinator::new(a)?.density(t, s)
}

fn sorted_breaks(mut interior: Vec<f64>) -> Vec<f64> {
    interior.retain(|v| v.is_finite());
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let mut points = vec![f64::NEG_INFINITY];
    points.extend(interior);
    points.push(f64::INFINITY);
    points
}

/// Integrates `exp(g(v))` over `v ∈ R`, surfacing the first error of `g`.
fn integrate_exp<G: FnMut(f64) -> DklResult<f64>>(
    mut g: G,
    interior: Vec<f64>,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    let points = sorted_breaks(interior);
    let mut failure = None;
    let q = integrate_with_breaks_scaled(
        |v| {
            let s = v.exp();
            if !(s > 0.0 && s.is_finite()) {
                return 0.0;
            }
            match g(v) {
                Ok(l) => l.exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &points,
        2.0,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q?.value)
}

/// `p^γ(t, x, y) = ∫ q^γ(s, x, y) P(S_t ∈ ds)`, integrated in `ln s`.
pub fn oracle_p(
    op: &OracleParams,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    check_point(op, x)?;
    check_point(op, y)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(DklError::domain("time must be positive"));
    }
    let sub = op.subordinator();
    let r = distance(x, y);
    let interior =
        vec![if r > 0.0 { 2.0 * r.ln() } else { f64::NAN }, (x.height() * y.height()).ln(), (2.0 / op.alpha) * t.ln()];
    integrate_exp(
        |v| {
            let s = v.exp();
            Ok(ln_killed_bm_density(op, s, x, y)? + sub.ln_density(t, s)? + v)
        },
        interior,
        spec,
    )
}

/// `J^γ(x, y) = ∫ q^γ(t, x, y) ν(t) dt` with the Lévy density `ν` of the
/// subordinator.
pub fn oracle_j(op: &OracleParams, x: &HalfSpacePoint, y: &HalfSpacePoint, spec: &QuadratureSpec) -> DklResult<f64> {
    check_point(op, x)?;
    check_point(op, y)?;
    let r = distance(x, y);
    if r == 0.0 {
        return Err(DklError::CoincidentPoints);
    }
    let sub = op.subordinator();
    integrate_exp(
        |v| {
            let t = v.exp();
            Ok(ln_killed_bm_density(op, t, x, y)? + sub.ln_levy_density(t) + v)
        },
        vec![2.0 * r.ln(), (x.height() * y.height()).ln()],
        spec,
    )
}

/// `∫_0^∞` of the radial factor in `y`: the probability that the radial part
/// started at height `x` is alive at time `t`. Exceeds 1 at small times when
/// `γ < 1/2`.
pub fn radial_mass(gamma: f64, t: f64, x: f64, spec: &QuadratureSpec) -> DklResult<f64> {
    if !(t > 0.0 && x > 0.0) {
        return Err(DklError::domain("radial mass needs t > 0 and x > 0"));
    }
    let w = t.sqrt();
    let mut points = vec![0.0, x];
    for k in [1.0, 4.0, 12.0] {
        points.push(k * w);
        points.push(x + k * w);
        if x > k * w {
            points.push(x - k * w);
        }
    }
    points.sort_by(f64::total_cmp);
    points.push(f64::INFINITY);
    let mut failure = None;
    let q = integrate_with_breaks_scaled(
        |y| {
            if y == 0.0 {
                return 0.0;
            }
            match ln_radial_density(gamma, t, x, y) {
                Ok(l) => l.exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &points,
        w,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q?.value)
}

/// Large-`z` expansion of the radial mass, `z = x²/(4t)`:
/// `Σ_n (A)_n (B)_n / n! z^{-n}` with `A = (γ+1/2)/2`, `B = (1/2-γ)/2`,
/// returning the sum without its leading 1. Truncated at the smallest term.
fn mass_expansion_tail(gamma: f64, z: f64) -> f64 {
    let a = 0.5 * (gamma + 0.5);
    let b = 0.5 * (0.5 - gamma);
    let mut term = 1.0f64;
    let mut sum = 0.0;
    let mut n = 0.0;
    loop {
        let next = term * (a + n) * (b + n) / ((n + 1.0) * z);
        if next.abs() >= term.abs() && n > 0.0 {
            break;
        }
        sum += next;
        term = next;
        n += 1.0;
        if term == 0.0 || term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `z` above which the expansion is used in place of quadrature.
const EXPANSION_SWITCH: f64 = 40.0;

/// `1 - M(t, x)` for the radial mass `M`.
pub fn radial_deficit(gamma: f64, t: f64, x: f64, spec: &QuadratureSpec) -> DklResult<f64> {
    let z = x * x / (4.0 * t);
    if z >= EXPANSION_SWITCH {
        Ok(-mass_expansion_tail(gamma, z))
    } else {
        Ok(1.0 - radial_mass(gamma, t, x, spec)?)
    }
}

/// `κ^γ(x) = ∫ (1 - ∫ q^γ(t, x, y) dy) ν(t) dt`. The tangential factors have
/// unit mass, so only the height enters. Below `t0 = x_d²/(4·40)` the deficit
/// is replaced by its expansion and integrated term by term against `ν`.
pub fn oracle_kappa(op: &OracleParams, x: &HalfSpacePoint, spec: &QuadratureSpec) -> DklResult<f64> {
    check_point(op, x)?;
    let h = x.height();
    let a = 0.5 * op.alpha;
    let norm = a / gamma(1.0 - a);
    let t0 = h * h / (4.0 * EXPANSION_SWITCH);

    // ∫_0^{t0} -Σ c_n (4t/h²)^n ν(t) dt = -norm t0^{-a} Σ c_n z0^{-n} / (n - a)
    let (ga, gb) = (0.5 * (op.gamma + 0.5), 0.5 * (0.5 - op.gamma));
    let mut coef = 1.0f64;
    let mut prev = f64::INFINITY;
    let mut series = 0.0;
    let mut n = 0.0;
    loop {
        coef *= (ga + n) * (gb + n) / ((n + 1.0) * EXPANSION_SWITCH);
        n += 1.0;
        let term = coef / (n - a);
        if term.abs() >= prev || coef == 0.0 {
            break;
        }
        series += term;
        prev = term.abs();
        if prev < 1e-18 * series.abs() {
            break;
        }
    }
    let small = -norm * t0.powf(-a) * series;

    let v0 = t0.ln();
    let mut failure = None;
    let large = integrate_with_breaks_scaled(
        |v| {
            let t = v.exp();
            match radial_deficit(op.gamma, t, h, spec) {
                Ok(def) => def * norm * t.powf(-a),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &[v0, v0 + 2.0, 2.0 * h.ln(), 2.0 * h.ln() + 3.0, f64::INFINITY],
        1.0 / a,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(small + large?.value)
}

/// `P_x(ζ > t) = ∫ M(s, x_d) P(S_t ∈ ds)`.
pub fn survival_probability(op: &OracleParams, t: f64, height: f64, spec: &QuadratureSpec) -> DklResult<f64> {
    if !(height > 0.0) || !(t > 0.0) {
        return Err(DklError::domain("survival needs t > 0 and positive height"));
    }
    let sub = op.subordinator();
    let inner = spec.inner(0.1);
    integrate_exp(
        |v| {
            let s = v.exp();
            let m = 1.0 - radial_deficit(op.gamma, s, height, &inner)?;
            Ok(m.ln() + sub.ln_density(t, s)? + v)
        },
        vec![2.0 * height.ln(), (2.0 / op.alpha) * t.ln()],
        spec,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalFit {
    /// Slope of `ln P_x(ζ > t)` against `ln(x_d / t^{1/α})`.
    pub q_fit: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(x_d / t^{1/α}, P_x(ζ > t))`.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares line through `(ln u, ln P)` at the given scaled heights
/// `u = x_d / t^{1/α}`, evaluated at `t = 1`.
pub fn fit_survival_exponent(
    op: &OracleParams,
    scaled_heights: &[f64],
    spec: &QuadratureSpec,
) -> DklResult<SurvivalFit> {
    if scaled_heights.len() < 2 {
        return Err(DklError::domain("survival fit needs at least two heights"));
    }
    let points: Vec<(f64, f64)> = scaled_heights
        .par_iter()
        .map(|&u| survival_probability(op, 1.0, u, spec).map(|p| (u, p)))
        .collect::<DklResult<_>>()?;
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SurvivalFit { q_fit: slope, intercept: my - slope * mx, r_squared, points })
}

/// Scaled heights used for the survival fit by default.
pub fn default_fit_heights() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-4.0 + 0.25 * k as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    pub points: Vec<HalfSpacePoint>,
    pub times: Vec<f64>,
}

impl OracleGrid {
    /// Points on the `e_d` axis with log-spaced heights in `[lo, hi]`.
    pub fn axis(d: usize, lo: f64, hi: f64, n_points: usize, times: Vec<f64>) -> DklResult<Self> {
        if n_points < 2 || !(lo > 0.0 && hi > lo) {
            return Err(DklError::domain("grid needs 0 < lo < hi and two points"));
        }
        let points = (0..n_points)
            .map(|k| {
                let h = lo * (hi / lo).powf(k as f64 / (n_points - 1) as f64);
                HalfSpacePoint::on_axis(d, h)
            })
            .collect::<DklResult<_>>()?;
        Ok(OracleGrid { points, times })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub x_index: usize,
    pub y_index: usize,
    pub oracle: f64,
    pub estimate: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub fit: SurvivalFit,
    pub rows: Vec<OracleRow>,
    pub report: ComparabilityReport,
}

/// `oracle_p / killed estimate` over all `(x, y, t)` in the grid, with the
/// estimate built for `β = (γ+1/2, γ+1/2, 0, 0)` and the fitted exponent.
pub fn compare_oracle_vs_estimate(
    op: &OracleParams,
    spec: &QuadratureSpec,
    grid: &OracleGrid,
    ceiling: f64,
) -> DklResult<OracleComparison> {
    if !(1..=2).contains(&op.dim) {
        return Err(DklError::Unsupported(format!("oracle comparison in dimension {}", op.dim)));
    }
    let fit = fit_survival_exponent(op, &default_fit_heights(), spec)?;
    let est = HeatKernelEstimator::new(op.comparable_model()?, fit.q_fit.max(0.0))?;
    let n = grid.points.len();
    let cells: Vec<(f64, usize, usize)> =
        grid.times.iter().flat_map(|&t| (0..n).flat_map(move |i| (0..n).map(move |j| (t, i, j)))).collect();
    let results: Vec<DklResult<OracleRow>> = cells
        .par_iter()
        .map(|&(t, i, j)| {
            let (x, y) = (&grid.points[i], &grid.points[j]);
            let oracle = oracle_p(op, t, x, y, spec)?;
            let estimate = est.killed(t, x, y)?;
            Ok(OracleRow { t, x_index: i, y_index: j, oracle, estimate, ratio: oracle / estimate })
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut samples = Vec::with_capacity(results.len());
    for (&(t, i, j), r) in cells.iter().zip(results) {
        let params = vec![t, grid.points[i].height(), grid.points[j].height()];
        match r {
            Ok(row) => {
                samples.push((params, Ok(row.ratio)));
                rows.push(row);
            }
            Err(e) => samples.push((params, Err(e))),
        }
    }
    let id = format!("oracle_g{}_a{}_d{}", op.gamma, op.alpha, op.dim);
    let report = ComparabilityReport::from_samples(id, Sidedness::TwoSided, ceiling, samples);
    Ok(OracleComparison { fit, rows, report })
}

/// `κ^γ(x) x_d^α` from the expansion of the gamma-function closed form at
/// `γ = 1/2`: `4^a Γ(a+1/2) / (Γ(1-a) √π)`, `a = α/2`.
pub fn half_order_killing_constant(alpha: f64) -> f64 {
    let a = 0.5 * alpha;
    4f64.powf(a) * gamma(a + 0.5) / (gamma(1.0 - a) * PI.sqrt())
}

/// `∫` of `q^γ(t, x, ·) q^γ(s, ·, y)` over the half-line, `d = 1`.
pub fn chapman_kolmogorov_1d(
    gamma_order: f64,
    t: f64,
    s: f64,
    x: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    let w = (t.max(s)).sqrt();
    let mut points = vec![0.0, x.min(y), x.max(y), x.max(y) + 4.0 * w, x.max(y) + 12.0 * w];
    points.sort_by(f64::total_cmp);
    points.push(f64::INFINITY);
    let mut failure = None;
    let q = integrate_with_breaks(
        |z| {
            if z == 0.0 {
                return 0.0;
            }
            match (ln_radial_density(gamma_order, t, x, z), ln_radial_density(gamma_order, s, z, y)) {
                (Ok(a), Ok(b)) => (a + b).exp(),
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &points,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q?.value)
}
