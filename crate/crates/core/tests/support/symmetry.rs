//! Scaling, tangential shift and swap symmetries, to a few ulp.
//!
//! Inputs are dyadic: coordinates are integers times a power of two, shifts
//! live on the same lattice and scale factors are `2^{4k}` with `α` a
//! multiple of `1/4`, so every transformed input and every exact rescaling
//! factor is representable. What remains is rounding inside the estimators.
//!
//! Time enters through `t^{1/α}`, whose exponent is rounded unless `1/α` is a
//! power of two; a rounded exponent turns `λ^α t` into `λ t^{1/α}` only up to
//! a relative error of order `ln λ` ulp. Time scaling is therefore checked
//! for `α ∈ {1/4, 1/2, 1}`; shift and swap for every drawn `α`.

use dkl_core::geometry::{eval_a, eval_b, HalfSpacePoint, ModelParams};
use dkl_core::green;
use dkl_core::hke::hke_closed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N: usize = 10_000;
pub const MAX_ULP: u64 = 4;

fn ulps(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    assert!(a.is_finite() && b.is_finite() && a.signum() == b.signum(), "{a} vs {b}");
    (a.abs().to_bits() as i64 - b.abs().to_bits() as i64).unsigned_abs()
}

struct Case {
    p: ModelParams,
    q: f64,
    /// `t^{1/α}`.
    tau: f64,
    x: HalfSpacePoint,
    y: HalfSpacePoint,
    /// Tangential shift on the coordinate lattice.
    shift: Vec<f64>,
    /// `log2 λ`, a multiple of 4.
    log_lambda: i32,
}

impl Case {
    fn t(&self) -> f64 {
        self.tau.powf(self.p.alpha)
    }

    fn time_exact(&self) -> bool {
        [0.25, 0.5, 1.0].contains(&self.p.alpha)
    }

    fn lambda(&self) -> f64 {
        2f64.powi(self.log_lambda)
    }

    /// `λ^e` for `e` a multiple of `1/4`: an exact power of two.
    fn lambda_pow(&self, e: f64) -> f64 {
        let k = self.log_lambda as f64 * e;
        assert_eq!(k, k.round());
        2f64.powi(k as i32)
    }

    fn scaled(&self) -> (f64, HalfSpacePoint, HalfSpacePoint) {
        let l = self.lambda();
        (self.t() * self.lambda_pow(self.p.alpha), self.x.scaled(l), self.y.scaled(l))
    }

    fn shifted(&self) -> (HalfSpacePoint, HalfSpacePoint) {
        let mv = |z: &HalfSpacePoint| {
            let mut c = z.coords().to_vec();
            for (v, s) in c.iter_mut().zip(&self.shift) {
                *v += s;
            }
            HalfSpacePoint::new(c).unwrap()
        };
        (mv(&self.x), mv(&self.y))
    }
}

fn draw(rng: &mut ChaCha8Rng) -> Case {
    let d = rng.gen_range(1..=3usize);
    let alpha = rng.gen_range(1..=7) as f64 / 4.0;
    let mut beta = [0.0; 4];
    for b in beta.iter_mut() {
        if rng.gen_bool(0.7) {
            *b = rng.gen_range(1..=12) as f64 / 4.0;
        }
    }
    if beta[0] == 0.0 {
        beta[2] = 0.0;
    }
    if beta[1] == 0.0 {
        beta[3] = 0.0;
    }
    let p = ModelParams::new(d, alpha, beta, 0.0).unwrap();
    let q = rng.gen_range(1..=12) as f64 / 4.0;
    // coordinates m 2^{e-10} with |m| < 2^12; heights positive
    let e = rng.gen_range(-20..=20);
    let unit = 2f64.powi(e - 10);
    let mut coord = |height: bool| {
        let m = if height { rng.gen_range(1..4096) } else { rng.gen_range(-4095..4096) };
        m as f64 * unit
    };
    let point = |c: &mut dyn FnMut(bool) -> f64| {
        let v: Vec<f64> = (0..d).map(|i| c(i + 1 == d)).collect();
        HalfSpacePoint::new(v).unwrap()
    };
    let x = point(&mut coord);
    let mut y = point(&mut coord);
    if y == x {
        y = y.with_height(y.height() + unit);
    }
    let tau = rng.gen_range(1..4096) as f64 * unit * 2f64.powi(rng.gen_range(-4..=4));
    let mut shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-4095..4096) as f64 * unit).collect();
    shift[d - 1] = 0.0;
    Case { p, q, tau, x, y, shift, log_lambda: 4 * rng.gen_range(-2..=2) }
}

/// Runs `f` over `N` cases and returns the worst ulp distance seen. A `None`
/// comparison is skipped; each kind must still run on a third of the cases.
fn worst(seed: u64, f: impl Fn(&Case) -> [Option<(f64, f64)>; 3]) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [0; 3];
    let mut runs = [0; 3];
    for _ in 0..N {
        let c = draw(&mut rng);
        for ((o, n), pair) in out.iter_mut().zip(runs.iter_mut()).zip(f(&c)) {
            if let Some((a, b)) = pair {
                *o = (*o).max(ulps(a, b));
                *n += 1;
            }
        }
    }
    assert!(runs.iter().all(|n| *n >= N / 3), "{runs:?}");
    out
}

/// Every checked function with its worst `[scaling, shift, swap]` ulp distances.
pub fn all() -> Vec<(&'static str, [u64; 3])> {
    vec![
        ("eval_b", boundary_weight()),
        ("eval_a", time_weight()),
        ("hke_closed", free_estimate()),
        ("killed_hke", killed_estimate()),
        ("green_estimate", green_estimate()),
    ]
}

pub fn boundary_weight() -> [u64; 3] {
    worst(11, |c| {
        let b = &c.p.beta;
        let v = eval_b(b, &c.x, &c.y).unwrap();
        let (_, xs, ys) = c.scaled();
        let (xt, yt) = c.shifted();
        [
            Some((v, eval_b(b, &xs, &ys).unwrap())),
            Some((v, eval_b(b, &xt, &yt).unwrap())),
            Some((v, eval_b(b, &c.y, &c.x).unwrap())),
        ]
    })
}

pub fn time_weight() -> [u64; 3] {
    worst(12, |c| {
        let (b, a, t) = (&c.p.beta, c.p.alpha, c.t());
        let v = eval_a(b, a, t, &c.x, &c.y).unwrap();
        let (ts, xs, ys) = c.scaled();
        let (xt, yt) = c.shifted();
        [
            c.time_exact().then(|| (v, eval_a(b, a, ts, &xs, &ys).unwrap())),
            Some((v, eval_a(b, a, t, &xt, &yt).unwrap())),
            Some((v, eval_a(b, a, t, &c.y, &c.x).unwrap())),
        ]
    })
}

pub fn free_estimate() -> [u64; 3] {
    worst(13, |c| {
        let d = c.p.d as f64;
        let f = |t, x: &HalfSpacePoint, y: &HalfSpacePoint| hke_closed(&c.p, c.q, t, x, y).unwrap().free_value;
        let v = f(c.t(), &c.x, &c.y);
        let (ts, xs, ys) = c.scaled();
        let (xt, yt) = c.shifted();
        [
            c.time_exact().then(|| (v, f(ts, &xs, &ys) * c.lambda_pow(d))),
            Some((v, f(c.t(), &xt, &yt))),
            Some((v, f(c.t(), &c.y, &c.x))),
        ]
    })
}

pub fn killed_estimate() -> [u64; 3] {
    worst(14, |c| {
        let d = c.p.d as f64;
        let f = |t, x: &HalfSpacePoint, y: &HalfSpacePoint| hke_closed(&c.p, c.q, t, x, y).unwrap().killed_value;
        let v = f(c.t(), &c.x, &c.y);
        let (ts, xs, ys) = c.scaled();
        let (xt, yt) = c.shifted();
        [
            c.time_exact().then(|| (v, f(ts, &xs, &ys) * c.lambda_pow(d))),
            Some((v, f(c.t(), &xt, &yt))),
            Some((v, f(c.t(), &c.y, &c.x))),
        ]
    })
}

pub fn green_estimate() -> [u64; 3] {
    worst(15, |c| {
        let e = c.p.d as f64 - c.p.alpha;
        let g = |x: &HalfSpacePoint, y: &HalfSpacePoint| green::green_estimate(&c.p, c.q, x, y).unwrap().value;
        let v = g(&c.x, &c.y);
        let (_, xs, ys) = c.scaled();
        let (xt, yt) = c.shifted();
        [Some((v, g(&xs, &ys) * c.lambda_pow(e))), Some((v, g(&xt, &yt))), Some((v, g(&c.y, &c.x)))]
    })
}
