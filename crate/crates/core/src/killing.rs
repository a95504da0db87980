//! The killing constant `C(alpha, q, B)`, its inverse `kappa -> q_kappa`, and a
//! shape scan over `q`.
//!
//! The `s`-integral is split at `s = 1/2`; the lower half is integrated in
//! `u = -ln s` and the upper half in `v = -ln(1 - s)`, with the integrand
//! assembled in log space. Both halves then decay exponentially, so the
//! near-divergent values close to the ends of the `q` range stay accurate.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::gamma;

use crate::error::{DklError, DklResult};
use crate::geometry::{BoundaryWeight, UnitSplit};
use crate::quadrature::{integrate_with_breaks, integrate_with_breaks_scaled, QuadratureSpec};

/// Sign and `ln|e^x - 1|`.
fn signed_ln_expm1(x: f64) -> (f64, f64) {
    if x == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else if x > 0.0 {
        let l = if x > 36.0 { x + (-(-x).exp()).ln_1p() } else { x.exp_m1().ln() };
        (1.0, l)
    } else {
        let l = if x < -36.0 { (-x.exp()).ln_1p() } else { (-x.exp_m1()).ln() };
        (-1.0, l)
    }
}

/// `(s^q - 1)(1 - s^{alpha-q-1}) (1-s)^{-1-alpha} e^{ln_b} * e^{extra}`, in log
/// space.
fn killing_integrand(alpha: f64, q: f64, split: &UnitSplit, ln_b: f64, extra: f64) -> f64 {
    let (s1, l1) = signed_ln_expm1(q * split.ln_s);
    let (s2, l2) = signed_ln_expm1((alpha - q - 1.0) * split.ln_s);
    let sign = -s1 * s2;
    if sign == 0.0 || ln_b == f64::NEG_INFINITY {
        return 0.0;
    }
    sign * (l1 + l2 - (1.0 + alpha) * split.ln_one_minus_s + ln_b + extra).exp()
}

/// `∫_0^1 (s^q-1)(1-s^{alpha-q-1})(1-s)^{-1-alpha} B(((1-s)u, 1), (0, s)) ds`.
fn unit_interval_integral(
    alpha: f64,
    q: f64,
    beta1: f64,
    w: &dyn BoundaryWeight,
    u: &[f64],
    spec: &QuadratureSpec,
) -> DklResult<(f64, f64)> {
    let lower_rate = q.min(0.0).min(alpha - 1.0).min(alpha - q - 1.0) + beta1 + 1.0;
    let upper_rate = 2.0 - alpha;
    // The pair is at distance (1-s)k; the weight has kinks where that
    // distance crosses the heights s and 1.
    let k = (1.0 + u.iter().map(|c| c * c).sum::<f64>()).sqrt();
    let mut lower_points = vec![LN_2, LN_2 + 30.0];
    let mut upper_points = vec![LN_2, LN_2 + 30.0, k.ln_1p()];
    if k > 1.0 {
        lower_points.push(-(-1.0 / k).ln_1p());
        upper_points.push(k.ln());
    }
    lower_points.push(f64::INFINITY);
    upper_points.push(f64::INFINITY);
    let lower = integrate_with_breaks_scaled(
        |t| {
            let split = UnitSplit::from_neg_ln_s(t);
            killing_integrand(alpha, q, &split, w.ln_killing_pair(u, &split), -t)
        },
        &lower_points,
        (1.0 / lower_rate.max(1e-300)).max(1.0),
        spec,
    )?;
    let upper = integrate_with_breaks_scaled(
        |t| {
            let split = UnitSplit::from_neg_ln_one_minus_s(t);
            killing_integrand(alpha, q, &split, w.ln_killing_pair(u, &split), -t)
        },
        &upper_points,
        (1.0 / upper_rate).max(1.0),
        spec,
    )?;
    Ok((lower.value + upper.value, lower.error + upper.error))
}

/// Surface area of the unit sphere in `R^n`.
pub(crate) fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

fn check_q(alpha: f64, q: f64, beta1: f64) -> DklResult<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(DklError::domain(format!("alpha = {alpha} outside (0, 2)")));
    }
    if !(q > -1.0 && q < alpha + beta1) {
        return Err(DklError::domain(format!("q = {q} outside (-1, alpha + beta1) = (-1, {})", alpha + beta1)));
    }
    Ok(())
}

/// `C(alpha, q, B)` with its accumulated quadrature error estimate.
pub fn killing_constant_with_error(
    alpha: f64,
    q: f64,
    w: &dyn BoundaryWeight,
    d: usize,
    spec: &QuadratureSpec,
) -> DklResult<(f64, f64)> {
    let beta1 = w.beta()[0];
    check_q(alpha, q, beta1)?;
    match d {
        0 => Err(DklError::domain("dimension must be at least 1")),
        1 => unit_interval_integral(alpha, q, beta1, w, &[], spec),
        _ => {
            let inner = spec.inner(0.1);
            let decay = -(d as f64 + alpha) / 2.0;
            let mut err = 0.0;
            let mut fail = None;
            let mut radial = |rho: f64, u: &[f64]| -> f64 {
                match unit_interval_integral(alpha, q, beta1, w, u, &inner) {
                    Ok((v, e)) => {
                        let jac = (rho * rho).ln_1p() * decay;
                        err += e * jac.exp();
                        v * jac.exp()
                    }
                    Err(e) => {
                        fail.get_or_insert(e);
                        0.0
                    }
                }
            };
            let value = if w.tangentially_isotropic() {
                let area = sphere_area(d - 1);
                let mut u = vec![0.0; d - 1];
                let q = integrate_with_breaks(
                    |rho| {
                        u[0] = rho;
                        area * rho.powi(d as i32 - 2) * radial(rho, &u)
                    },
                    &[0.0, 1.0, f64::INFINITY],
                    spec,
                )?;
                q.value
            } else if d == 2 {
                integrate_with_breaks(
                    |rho| radial(rho.abs(), &[rho]),
                    &[f64::NEG_INFINITY, -1.0, 0.0, 1.0, f64::INFINITY],
                    spec,
                )?
                .value
            } else if d == 3 {
                let mut angular_fail = None;
                let v = integrate_with_breaks(
                    |rho| {
                        let r = crate::quadrature::integrate(
                            |phi| radial(rho, &[rho * phi.cos(), rho * phi.sin()]),
                            0.0,
                            2.0 * PI,
                            &inner,
                        );
                        match r {
                            Ok(a) => rho * a.value,
                            Err(e) => {
                                angular_fail.get_or_insert(e);
                                0.0
                            }
                        }
                    },
                    &[0.0, 1.0, f64::INFINITY],
                    spec,
                )?
                .value;
                if let Some(e) = angular_fail {
                    return Err(e);
                }
                v
            } else {
                return Err(DklError::Unsupported(format!(
                    "killing constant for a tangentially anisotropic weight in dimension {d}"
                )));
            };
            if let Some(e) = fail {
                return Err(e);
            }
            Ok((value, err))
        }
    }
}

/// `C(alpha, q, B)` for `q in (-1, alpha + beta1)`.
pub fn compute_c(alpha: f64, q: f64, w: &dyn BoundaryWeight, d: usize, spec: &QuadratureSpec) -> DklResult<f64> {
    killing_constant_with_error(alpha, q, w, d, spec).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSolution {
    pub q: f64,
    pub residual: f64,
    pub evaluations: usize,
}

/// The unique `q` in `[(alpha-1)_+, alpha + beta1)` with `C(alpha, q, B) = kappa`,
/// found by bisection on the increasing branch.
pub fn solve_q(
    alpha: f64,
    kappa: f64,
    w: &dyn BoundaryWeight,
    d: usize,
    spec: &QuadratureSpec,
) -> DklResult<QSolution> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(DklError::domain(format!("kappa = {kappa} must be finite and >= 0")));
    }
    let beta1 = w.beta()[0];
    check_q(alpha, (alpha - 1.0).max(0.0), beta1)?;
    let lo0 = (alpha - 1.0).max(0.0);
    if kappa == 0.0 {
        return Ok(QSolution { q: lo0, residual: compute_c(alpha, lo0, w, d, spec)?.abs(), evaluations: 1 });
    }
    let top = alpha + beta1;
    let c = |q: f64| compute_c(alpha, q, w, d, spec);
    let mut evaluations = 0;
    let mut lo = lo0;
    let mut gap = top - lo0;
    let mut hi = loop {
        gap *= 0.5;
        let cand = top - gap;
        evaluations += 1;
        if c(cand)? >= kappa {
            break cand;
        }
        lo = cand;
        if gap < 1e-12 * top.abs().max(1.0) {
            return Err(DklError::Bracket(format!("C stays below kappa = {kappa} up to q = {cand}")));
        }
    };
    let tol = 1e-14 * hi.abs().max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        evaluations += 1;
        if c(mid)? < kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    evaluations += 1;
    Ok(QSolution { q, residual: (c(q)? - kappa).abs(), evaluations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CShapeTable {
    pub alpha: f64,
    pub beta: [f64; 4],
    pub d: usize,
    pub q_grid: Vec<f64>,
    pub c_values: Vec<f64>,
    pub c_errors: Vec<f64>,
    pub zeros: Vec<f64>,
    pub minimizer: f64,
    pub min_value: f64,
    pub decreasing_ok: bool,
    pub increasing_ok: bool,
    pub zeros_ok: bool,
    pub minimum_ok: bool,
    /// Consecutive grid indices where the expected monotonicity fails.
    pub violations: Vec<(usize, usize)>,
    /// `C(-1 + 1e-3)` and `C(alpha + beta1 - 1e-3)`.
    pub edge_values: (f64, f64),
}

impl CShapeTable {
    pub fn shape_ok(&self) -> bool {
        self.decreasing_ok && self.increasing_ok && self.zeros_ok && self.minimum_ok
    }

    /// Both edge values exceed `1e3 |min C|`.
    pub fn edges_blow_up(&self) -> bool {
        let floor = 1e3 * self.min_value.abs();
        self.edge_values.0 > floor && self.edge_values.1 > floor
    }

    pub fn verify(&self) -> DklResult<()> {
        if self.shape_ok() {
            return Ok(());
        }
        let pairs: Vec<String> =
            self.violations.iter().map(|(i, j)| format!("({}, {})", self.q_grid[*i], self.q_grid[*j])).collect();
        Err(DklError::Domain(format!(
            "shape violation: decreasing {}, increasing {}, zeros {:?}, minimizer {}; offending pairs [{}]",
            self.decreasing_ok,
            self.increasing_ok,
            self.zeros,
            self.minimizer,
            pairs.join(", ")
        )))
    }
}

const EDGE: f64 = 1e-3;

/// Tabulates `C(alpha, ., B)` on `points` interior grid nodes of
/// `(-1, alpha + beta1)` (plus `0`, `alpha - 1`, `(alpha - 1)/2`) and checks the
/// expected shape.
pub fn scan_shape(
    alpha: f64,
    w: &dyn BoundaryWeight,
    d: usize,
    points: usize,
    spec: &QuadratureSpec,
) -> DklResult<CShapeTable> {
    let beta = w.beta();
    let top = alpha + beta[0];
    let (a, b) = (-1.0 + EDGE, top - EDGE);
    let n = points.max(3);
    let mut grid: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let centre = (alpha - 1.0) / 2.0;
    grid.extend([0.0, alpha - 1.0, centre]);
    grid.retain(|q| *q > -1.0 && *q < top);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let evals: Vec<(f64, f64)> =
        grid.iter().map(|&q| killing_constant_with_error(alpha, q, w, d, spec)).collect::<DklResult<_>>()?;
    let c_values: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let c_errors: Vec<f64> = evals.iter().map(|e| e.1).collect();
    let noise = |i: usize| 4.0 * c_errors[i] + 8.0 * f64::EPSILON * c_values[i].abs();

    let mut violations = Vec::new();
    let (mut decreasing_ok, mut increasing_ok) = (true, true);
    for i in 0..grid.len() - 1 {
        let slack = noise(i) + noise(i + 1);
        if grid[i + 1] <= centre + 1e-12 {
            if c_values[i + 1] >= c_values[i] + slack {
                decreasing_ok = false;
                violations.push((i, i + 1));
            }
        } else if grid[i] >= centre - 1e-12 && c_values[i + 1] + slack <= c_values[i] {
            increasing_ok = false;
            violations.push((i, i + 1));
        }
    }

    let c = |q: f64| compute_c(alpha, q, w, d, spec);
    let mut zeros = Vec::new();
    for i in 0..grid.len() {
        if c_values[i].abs() <= noise(i).max(1e-300) {
            zeros.push(grid[i]);
        }
    }
    for i in 0..grid.len() - 1 {
        let (ci, cj) = (c_values[i], c_values[i + 1]);
        if ci * cj < 0.0 && ci.abs() > noise(i) && cj.abs() > noise(i + 1) {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let mut clo = ci;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let cm = c(mid)?;
                if cm.signum() == clo.signum() {
                    lo = mid;
                    clo = cm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
    }
    zeros.sort_by(f64::total_cmp);
    zeros.dedup_by(|x, y| (*x - *y).abs() < 1e-6);

    let imin = (0..grid.len()).min_by(|&i, &j| c_values[i].total_cmp(&c_values[j])).unwrap();
    let (minimizer, min_value) =
        golden_section(&c, grid[imin.saturating_sub(1)], grid[(imin + 1).min(grid.len() - 1)], 1e-9)?;

    let min_value = min_value.min(c_values[imin]);
    let minimum_ok = (minimizer - centre).abs() <= 1e-4 && min_value <= noise(imin);

    let mut expected = vec![0.0, alpha - 1.0];
    expected.sort_by(f64::total_cmp);
    expected.dedup_by(|x, y| (*x - *y).abs() < 1e-6);
    let zeros_ok = zeros.len() == expected.len() && zeros.iter().zip(&expected).all(|(z, e)| (z - e).abs() < 1e-6);

    let edge_values = (c(-1.0 + EDGE)?, c(top - EDGE)?);
    Ok(CShapeTable {
        alpha,
        beta,
        d,
        q_grid: grid,
        c_values,
        c_errors,
        zeros,
        minimizer,
        min_value,
        decreasing_ok,
        increasing_ok,
        zeros_ok,
        minimum_ok,
        violations,
        edge_values,
    })
}

fn golden_section<F: Fn(f64) -> DklResult<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> DklResult<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PowerLogWeight;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default().with_rel_tol(1e-12)
    }

    fn w(beta: [f64; 4]) -> PowerLogWeight {
        PowerLogWeight::new(beta).unwrap()
    }

    #[test]
    fn zeros_are_exact() {
        for &alpha in &[0.3, 1.0, 1.7] {
            let w0 = w([0.0; 4]);
            assert_eq!(compute_c(alpha, 0.0, &w0, 1, &spec()).unwrap(), 0.0);
            let c = compute_c(alpha, alpha - 1.0, &w0, 1, &spec()).unwrap();
            assert!(c.abs() < 1e-14, "{c}");
        }
    }

    #[test]
    fn reflection_symmetry() {
        let wb = w([0.5, 1.0, 1.0, 0.0]);
        for &(alpha, q) in &[(0.7, 0.3), (1.5, -0.2), (1.2, 0.9)] {
            let a = compute_c(alpha, q, &wb, 1, &spec()).unwrap();
            let b = compute_c(alpha, alpha - 1.0 - q, &wb, 1, &spec()).unwrap();
            assert!((a - b).abs() <= 2e-12 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-13);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn solve_q_inverts_c() {
        let wb = w([1.0, 1.0, 0.0, 0.0]);
        let c = compute_c(0.5, 0.25, &wb, 1, &spec()).unwrap();
        let s = solve_q(0.5, c, &wb, 1, &spec()).unwrap();
        assert!((s.q - 0.25).abs() < 1e-9, "{}", s.q);
        assert_eq!(solve_q(1.4, 0.0, &wb, 1, &spec()).unwrap().q, 1.4 - 1.0);
    }

    #[test]
    fn rejects_out_of_range_q() {
        let wb = w([0.5, 0.0, 0.0, 0.0]);
        assert!(compute_c(1.0, 1.5, &wb, 1, &spec()).is_err());
        assert!(compute_c(1.0, -1.0, &wb, 1, &spec()).is_err());
    }
}
