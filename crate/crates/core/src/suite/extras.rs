use super::{ratio, region, Definition, Region};
use crate::geometry::{a_weight, distance, ModelParams, PowerLogWeight};
use crate::green::{green_by_time_integration, green_estimate};
use crate::hke::{ball_closed, hke_closed, hke_unified, twojump_ball_integral, BallMode, HeatKernelEstimator};
use crate::report::Sidedness::{Lower, TwoSided, Upper};
use crate::special::bessel_i_scaled;

type Set = (usize, f64, [f64; 4]);

const ONE_JUMP: [Set; 3] =
    [(1, 1.0, [0.5, 0.5, 0.0, 0.0]), (2, 1.5, [1.0, 0.5, 1.0, 0.0]), (2, 0.5, [0.2, 0.6, 0.0, 0.0])];
const TWO_JUMP: [Set; 3] =
    [(1, 0.5, [1.0, 2.0, 0.0, 0.0]), (2, 0.5, [0.5, 2.0, 0.0, 0.0]), (2, 1.0, [0.5, 2.0, 1.0, 1.0])];
const CRITICAL: [Set; 3] =
    [(1, 1.0, [0.5, 1.5, 0.0, 0.0]), (2, 0.5, [1.0, 1.5, 1.0, 1.0]), (2, 1.5, [0.0, 1.5, 0.0, 1.0])];

pub(crate) fn definition(id: &str) -> Option<Definition> {
    let (sidedness, regions) = match id {
        "hke_unified_one_jump" => (TwoSided, unified(&ONE_JUMP)),
        "hke_unified_two_jump" => (TwoSided, unified(&TWO_JUMP)),
        "hke_unified_critical" => (TwoSided, unified(&CRITICAL)),
        "regime_consistency" => (Upper, regime_consistency()),
        "near_diagonal" => (Lower, near_diagonal()),
        "wtb_interior" => (Lower, wtb_interior()),
        "ball_d1" => (TwoSided, ball(1)),
        "ball_d2" => (TwoSided, ball(2)),
        "bessel_bound" => (TwoSided, bessel_bound()),
        "green" => (TwoSided, green()),
        _ => return None,
    };
    Some(Definition { sidedness, regions })
}

fn set_name((d, alpha, b): &Set) -> String {
    format!("d{d}_a{alpha}_b{}_{}_{}_{}", b[0], b[1], b[2], b[3])
}

/// The unified form against the closed-form free estimate.
fn unified(sets: &[Set]) -> Vec<Region> {
    sets.iter()
        .map(|set| {
            let (d, alpha, b) = *set;
            region(set_name(set), TwoSided, move |s, spec| {
                let p = ModelParams::new(d, alpha, b, 0.0)?;
                let w = PowerLogWeight::new(b)?;
                let (x, y) = s.pair(d);
                let t = s.scale().powf(alpha);
                let lhs = hke_unified(&p, &w, 0.0, t, &x, &y, spec)?;
                ratio(lhs, hke_closed(&p, 0.0, t, &x, &y)?.free_value)
            })
        })
        .collect()
}

/// The two-jump ball term never exceeds the one-jump term in the one-jump
/// regime.
fn regime_consistency() -> Vec<Region> {
    ONE_JUMP
        .iter()
        .map(|set| {
            let (d, alpha, b) = *set;
            region(set_name(set), Upper, move |s, _| {
                let p = ModelParams::new(d, alpha, b, 0.0)?;
                let (x, y) = s.pair(d);
                let t = s.scale().powf(alpha);
                let one_jump = hke_closed(&p, 0.0, t, &x, &y)?.one_jump;
                ratio(ball_closed(&p, t, &x, &y)?, one_jump)
            })
        })
        .collect()
}

/// `t^{d/α} p(t, x, y)` stays bounded below when `|x - y| <= t^{1/α}`.
fn near_diagonal() -> Vec<Region> {
    [(1, 0.5, [1.0, 2.0, 0.0, 0.0]), (2, 1.0, [0.5, 0.5, 1.0, 1.0]), (3, 1.5, [1.0, 2.5, 0.0, 1.0])]
        .iter()
        .map(|set| {
            let (d, alpha, b) = *set;
            region(set_name(set), Lower, move |s, _| {
                let p = ModelParams::new(d, alpha, b, 0.0)?;
                let tau = s.scale();
                let lo = tau * s.log_uniform(1.0, 1e6);
                let r = tau * s.log_uniform(1e-6, 1.0);
                let (x, y) = s.pair_at_distance(d, lo, r);
                let free = hke_closed(&p, 0.0, tau.powf(alpha), &x, &y)?.free_value;
                Ok(free * tau.powi(d as i32))
            })
        })
        .collect()
}

/// `A_b(t, x, y) >= c (a ∧ 1)^{b1 + b2}` when `|x - y| <= (x_d ∧ y_d + t^{1/α}) / a`.
fn wtb_interior() -> Vec<Region> {
    [0.1, 1.0, 10.0]
        .into_iter()
        .map(|a: f64| {
            region(format!("a{a}"), Lower, move |s, _| {
                let b = [1.0, 1.0, 1.0, 1.0];
                let d = s.pick(&[1u8, 2, 3]) as usize;
                let lo = s.scale();
                let tau = s.scale();
                let r = (lo + tau) / a * s.log_uniform(1e-6, 1.0);
                let (x, y) = s.pair_at_distance(d, lo, r);
                ratio(a_weight(&b, 1.0, tau, &x, &y), a.min(1.0).powf(b[0] + b[1]))
            })
        })
        .collect()
}

/// The ball integral by quadrature against its closed form, for `r > 6 t^{1/α}`.
/// The nested angular integrals run at a thousandfold looser tolerance.
fn ball(d: usize) -> Vec<Region> {
    [(0.5, [0.5, 2.0, 0.0, 0.0]), (1.0, [1.0, 2.5, 1.0, 0.5])]
        .into_iter()
        .map(|(alpha, b)| {
            region(set_name(&(d, alpha, b)), TwoSided, move |s, spec| {
                let p = ModelParams::new(d, alpha, b, 0.0)?;
                let w = PowerLogWeight::new(b)?;
                let (x, y) = s.pair(d);
                let r = distance(&x, &y);
                let tau = r / 6.0 * s.log_uniform(1e-6, 0.999);
                let t = tau.powf(alpha);
                let mode = BallMode::Quadrature(spec.with_rel_tol(spec.rel_tol * 1e3));
                let lhs = twojump_ball_integral(&p, &w, t, &x, &y, mode)?;
                ratio(lhs, ball_closed(&p, t, &x, &y)?)
            })
        })
        .collect()
}

/// `e^{-z} I_γ(z) ≍ (1 ∧ z)^{γ + 1/2} z^{-1/2}`.
fn bessel_bound() -> Vec<Region> {
    [0.0, 0.5, 1.5]
        .into_iter()
        .map(|gamma: f64| {
            region(format!("g{gamma}"), TwoSided, move |s, _| {
                let z = s.scale();
                let rhs = z.min(1.0).powf(gamma + 0.5) / z.sqrt();
                ratio(bessel_i_scaled(gamma, z)?, rhs)
            })
        })
        .collect()
}

/// The Green estimate against the time integral of the heat kernel estimate,
/// below, at and above the threshold exponent for `d >= 2`, and for `d = 1`
/// with `α` below, at and above one.
fn green() -> Vec<Region> {
    let sets: [(usize, f64, [f64; 4], f64); 9] = [
        (2, 1.0, [1.0, 0.2, 0.0, 1.0], 0.5),
        (2, 1.0, [1.0, 0.2, 0.0, 1.0], 1.6),
        (2, 1.0, [1.0, 0.2, 0.0, 1.0], 1.9),
        (3, 1.5, [1.0, 0.0, 0.0, 0.0], 1.0),
        (3, 1.5, [1.0, 0.0, 0.0, 0.0], 2.0),
        (3, 1.5, [1.0, 0.0, 0.0, 0.0], 2.3),
        (1, 0.6, [0.5, 0.5, 0.0, 0.0], 0.5),
        (1, 1.0, [0.5, 0.5, 0.0, 0.0], 0.5),
        (1, 1.4, [1.0, 1.0, 0.0, 0.0], 0.6),
    ];
    sets.into_iter()
        .map(|(d, alpha, b, q)| {
            region(format!("{}_q{q}", set_name(&(d, alpha, b))), TwoSided, move |s, spec| {
                let p = ModelParams::new(d, alpha, b, 0.0)?;
                let est = HeatKernelEstimator::new(p, q)?;
                let (x, y) = s.pair(d);
                let lhs = green_by_time_integration(&est, &x, &y, spec)?.value;
                ratio(lhs, green_estimate(&p, q, &x, &y)?.value)
            })
        })
        .collect()
}
