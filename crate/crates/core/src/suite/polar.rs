use std::f64::consts::PI;

use crate::error::{DklError, DklResult};
use crate::quadrature::{integrate_graded, integrate_with_breaks_scaled, Node, QuadratureSpec};

/// `∫ g(|x - z|, z_d) dz` over `{z ∈ R^d_+ : lo < |x - z| < hi}` for a point
/// `x` at height `xd`, for integrands that depend on `z` only through the
/// distance to `x` and the height of `z`.
///
/// Polar coordinates about `x`: the radius is integrated in `ln ρ` (split at
/// `xd`, where the boundary starts to cut the sphere, and at `breaks`), and
/// the polar angle through `c = cos θ` on `[max(-1, -xd/ρ), 1]` with graded
/// ends, which absorbs `z_d^{-p}` singularities at the boundary and the
/// `(1 - c²)^{-1/2}` weight of the plane. `tail_scale` sets the map for an
/// infinite `hi` or a zero `lo`.
pub fn half_space_polar<G: Fn(f64, f64) -> f64>(
    d: usize,
    xd: f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tail_scale: f64,
    g: G,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    if d == 0 || d > 3 {
        return Err(DklError::Unsupported(format!("polar integration in dimension {d}")));
    }
    if !(xd > 0.0) || !(lo >= 0.0) || !(hi > lo) {
        return Err(DklError::domain("polar integration needs xd > 0 and 0 <= lo < hi"));
    }
    if d == 1 {
        return line(xd, lo, hi, breaks, tail_scale, &g, spec);
    }
    let inner = spec.inner(0.1);
    let mut fail = None;
    let mut shell = |rho: f64| -> f64 {
        if rho == 0.0 || rho.is_infinite() {
            return 0.0;
        }
        let c_lo = (-xd / rho).max(-1.0);
        // height at the lower end of the angular range
        let z_lo = (xd - rho).max(0.0);
        let one_plus_lo = ((rho - xd) / rho).max(0.0);
        let area = if d == 2 { 2.0 } else { 2.0 * PI };
        let value = integrate_graded(
            |n: Node| {
                let z = z_lo + rho * n.from_left;
                let weight = if d == 2 {
                    let one_plus = one_plus_lo + n.from_left;
                    1.0 / (n.from_right * one_plus).sqrt()
                } else {
                    1.0
                };
                g(rho, z) * weight
            },
            &[c_lo, 1.0],
            &inner,
        )
        .map(|q| area * q.value);
        match value {
            // ρ^d overflows far out in a tail where the shell integral underflows
            Ok(v) if v > 0.0 => (v.ln() + d as f64 * rho.ln()).exp(),
            Ok(v) => v,
            Err(e) => {
                fail.get_or_insert(e);
                0.0
            }
        }
    };
    let (a, b) = (lo.ln(), hi.ln());
    let mut points = vec![a];
    for p in std::iter::once(xd).chain(breaks.iter().copied()) {
        if p > lo && p < hi {
            points.push(p.ln());
        }
    }
    points.push(b);
    let q = integrate_with_breaks_scaled(|v| shell(v.exp()), &points, tail_scale, spec)?;
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(q.value)
}

/// The one-dimensional case: `z = xd + ρ` in `ln ρ`, and `z = xd - ρ` in
/// `ln ρ` up to `xd/2` and in `ln z` beyond, so that both ends of the
/// lower branch keep their singularities at a mapped end.
fn line<G: Fn(f64, f64) -> f64>(
    xd: f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tail_scale: f64,
    g: &G,
    spec: &QuadratureSpec,
) -> DklResult<f64> {
    let log_points = |a: f64, b: f64, extra: &[f64]| {
        let mut points = vec![a.ln()];
        points.extend(extra.iter().filter(|p| **p > a && **p < b).map(|p| p.ln()));
        points.push(b.ln());
        points
    };
    let at = |f: &dyn Fn(f64) -> f64, v: f64| {
        let u = v.exp();
        if u == 0.0 || u.is_infinite() {
            0.0
        } else {
            f(u) * u
        }
    };
    let up = |rho: f64| g(rho, xd + rho);
    let mut total = integrate_with_breaks_scaled(|v| at(&up, v), &log_points(lo, hi, breaks), tail_scale, spec)?.value;
    let half = 0.5 * xd;
    if lo < half {
        let down = |rho: f64| g(rho, xd - rho);
        let top = hi.min(half);
        total += integrate_with_breaks_scaled(|v| at(&down, v), &log_points(lo, top, breaks), tail_scale, spec)?.value;
    }
    if hi > half && lo < xd {
        // z = xd - ρ over ρ ∈ (lo ∨ xd/2, hi ∧ xd)
        let (z_lo, z_hi) = ((xd - hi).max(0.0), xd - lo.max(half));
        let moved: Vec<f64> = breaks.iter().map(|b| xd - b).collect();
        let down = |z: f64| g(xd - z, z);
        total += integrate_with_breaks_scaled(|v| at(&down, v), &log_points(z_lo, z_hi, &moved), 1.0, spec)?.value;
    }
    Ok(total)
}
