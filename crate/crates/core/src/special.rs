//! Modified Bessel functions of the first kind and one-sided stable densities.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{DklError, DklResult};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};

fn series_limit(order: f64) -> f64 {
    30.0f64.max(2.0 * order * order + 10.0)
}

/// Power series part: `I_γ(r) = (r/2)^γ / Γ(γ+1) * Σ_m t_m`; returns `ln Σ`.
fn ln_series_sum(order: f64, r: f64) -> f64 {
    let h2 = 0.25 * r * r;
    let mut term = 1.0;
    let mut sum = 1.0f64;
    let mut m = 0.0;
    loop {
        term *= h2 / ((m + 1.0) * (order + m + 1.0));
        sum += term;
        m += 1.0;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum.ln()
}

/// `ln(I_γ(r) e^{-r} sqrt(2 pi r))` from the large-argument expansion.
fn ln_asymptotic_scaled(order: f64, r: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0f64;
    loop {
        let next = -term * (mu - (2.0 * k - 1.0).powi(2)) / (k * 8.0 * r);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln()
}

/// `ln I_γ(r)` for `γ >= 0`, `r >= 0`.
pub fn ln_bessel_i(order: f64, r: f64) -> DklResult<f64> {
    if !(order >= 0.0) || !(r >= 0.0) || !r.is_finite() {
        return Err(DklError::domain(format!("Bessel I needs order >= 0 and finite r >= 0, got ({order}, {r})")));
    }
    if r == 0.0 {
        return Ok(if order == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if r <= series_limit(order) {
        Ok(order * (0.5 * r).ln() - ln_gamma(order + 1.0) + ln_series_sum(order, r))
    } else {
        Ok(r - 0.5 * (2.0 * PI * r).ln() + ln_asymptotic_scaled(order, r))
    }
}

/// `I_γ(r)`; overflows to `+inf` beyond `r ≈ 709`, use [`ln_bessel_i`] or
/// [`bessel_i_scaled`] there.
pub fn bessel_i(order: f64, r: f64) -> DklResult<f64> {
    ln_bessel_i(order, r).map(f64::exp)
}

/// `ln(I_γ(r) e^{-r})`, without cancellation for large `r`.
pub fn ln_bessel_i_scaled(order: f64, r: f64) -> DklResult<f64> {
    if r > series_limit(order) && r.is_finite() && order >= 0.0 {
        return Ok(-0.5 * (2.0 * PI * r).ln() + ln_asymptotic_scaled(order, r));
    }
    ln_bessel_i(order, r).map(|l| l - r)
}

/// `I_γ(r) e^{-r}`.
pub fn bessel_i_scaled(order: f64, r: f64) -> DklResult<f64> {
    ln_bessel_i_scaled(order, r).map(f64::exp)
}

/// Taylor coefficients of `-ln(sin u / u)` in `u²`: `ζ(2n) / (n π^{2n})`.
const LN_SINC: [f64; 18] = [
    0.16666666666666667,
    0.0055555555555555556,
    0.0003527336860670194,
    2.6455026455026455e-5,
    2.1377799155576933e-6,
    1.803670234005331e-7,
    1.5661391322766984e-8,
    1.3884130493737299e-9,
    1.2504359176004996e-10,
    1.1402575602296091e-11,
    1.0502923908637556e-12,
    9.7548778415937016e-14,
    9.1234682308590978e-15,
    8.5837197618956093e-16,
    8.1173180097277896e-17,
    7.7105275141162733e-18,
    7.3528449327120026e-19,
    7.0361012103906523e-20,
];

/// `ln(sin u / u)` for `0 <= u <= π`, with full relative precision as
/// `u → 0`.
fn ln_sinc(u: f64) -> f64 {
    if u > 1.0 {
        return (u.sin() / u).ln();
    }
    let w = u * u;
    let mut acc = 0.0;
    for c in LN_SINC.iter().rev() {
        acc = acc * w + c;
    }
    -acc * w
}

/// Above this value of `A(0) x^{-a/(1-a)}` the Laplace approximation of the
/// integral representation is used; its relative error is of that order.
const LAPLACE_SWITCH: f64 = 1e12;

/// Above this value of `x^{-a}` the integral representation is used.
const SERIES_SWITCH: f64 = 0.5;

/// Density of the one-sided stable law with Laplace transform `exp(-t λ^a)`,
/// `0 < a < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSubordinator {
    a: f64,
    a0: f64,
    spec: QuadratureSpec,
}

impl StableSubordinator {
    pub fn new(a: f64) -> DklResult<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(DklError::domain(format!("stable index {a} outside (0, 1)")));
        }
        Ok(StableSubordinator {
            a,
            a0: (1.0 - a) * a.powf(a / (1.0 - a)),
            spec: QuadratureSpec::default().with_rel_tol(1e-12),
        })
    }

    pub fn index(&self) -> f64 {
        self.a
    }

    /// Lévy density `a / Γ(1-a) s^{-1-a}`.
    pub fn levy_density(&self, s: f64) -> f64 {
        self.a / gamma(1.0 - self.a) * s.powf(-1.0 - self.a)
    }

    pub fn ln_levy_density(&self, s: f64) -> f64 {
        self.a.ln() - ln_gamma(1.0 - self.a) - (1.0 + self.a) * s.ln()
    }

    /// `ln A(φ) - ln A(0)` for the Kanter–Zolotarev function
    /// `A(φ) = (sin(aφ)/sin φ)^{1/(1-a)} sin((1-a)φ)/sin(aφ)`, written with
    /// `sinc` so that the small-angle cancellation is exact.
    fn ln_kz_excess(&self, phi: f64) -> f64 {
        let a = self.a;
        (ln_sinc(a * phi) - ln_sinc(phi)) / (1.0 - a) + ln_sinc((1.0 - a) * phi) - ln_sinc(a * phi)
    }

    fn ln_density_series(&self, x: f64) -> f64 {
        let a = self.a;
        let xa = x.powf(-a);
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut k = 1.0f64;
        loop {
            pow *= xa;
            let mag = (ln_gamma(a * k + 1.0) - ln_gamma(k + 1.0)).exp() * pow;
            let term = mag * (PI * a * k).sin();
            sum += if (k as i64) % 2 == 1 { term } else { -term };
            if mag < 1e-17 * sum.abs() || k > 2000.0 {
                break;
            }
            k += 1.0;
        }
        (sum / PI).ln() - x.ln()
    }

    fn ln_density_integral(&self, x: f64) -> DklResult<f64> {
        let a = self.a;
        let zeta = x.powf(-a / (1.0 - a));
        let a0_zeta = self.a0 * zeta;
        let prefactor = (a / ((1.0 - a) * PI)).ln() + self.a0.ln() - x.ln() / (1.0 - a) - a0_zeta;
        if a0_zeta > LAPLACE_SWITCH {
            // the φ-integral concentrates at 0 where ln A - ln A0 ≈ aφ²/2
            return Ok(prefactor + 0.5 * (PI / (2.0 * a * a0_zeta)).ln());
        }
        // (A - A0) zeta at φ, monotone in φ
        let excess = |phi: f64| a0_zeta * self.ln_kz_excess(phi).exp_m1();
        let solve = |level: f64| -> f64 {
            let (mut lo, mut hi) = (0.0, PI);
            for _ in 0..24 {
                let mid = 0.5 * (lo + hi);
                if excess(mid) < level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut points = vec![0.0, PI];
        let mut levels = vec![1.0 / 16.0, 0.25, 1.0, 4.0, 16.0, 64.0];
        if self.a0 * zeta < 1.0 {
            levels.push(1.0 - self.a0 * zeta);
        }
        points.extend(levels.into_iter().map(solve));
        points.sort_by(f64::total_cmp);
        points.dedup();
        let q = integrate_with_breaks(
            |phi| {
                let d = self.ln_kz_excess(phi);
                (d - a0_zeta * d.exp_m1()).exp()
            },
            &points,
            &self.spec,
        )?;
        Ok(prefactor + q.value.ln())
    }

    /// `ln` of the density of `S_1` at `x > 0`.
    pub fn ln_density_unit(&self, x: f64) -> DklResult<f64> {
        if !(x >= 0.0) {
            return Err(DklError::domain("stable density needs x >= 0"));
        }
        if x == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if x.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        if x.powf(-self.a) <= SERIES_SWITCH {
            Ok(self.ln_density_series(x))
        } else {
            self.ln_density_integral(x)
        }
    }

    /// Both representations at `x`; for cross-validation in the overlap band.
    pub fn ln_density_both(&self, x: f64) -> DklResult<(f64, f64)> {
        Ok((self.ln_density_series(x), self.ln_density_integral(x)?))
    }

    /// `ln` of the density of `S_t` at `s`: `t^{-1/a} g_1(s t^{-1/a})`.
    pub fn ln_density(&self, t: f64, s: f64) -> DklResult<f64> {
        let scale = t.powf(-1.0 / self.a);
        Ok(scale.ln() + self.ln_density_unit(s * scale)?)
    }

    pub fn density(&self, t: f64, s: f64) -> DklResult<f64> {
        self.ln_density(t, s).map(f64::exp)
    }
}
