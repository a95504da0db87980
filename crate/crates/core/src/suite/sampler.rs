use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::HalfSpacePoint;

/// Lower and upper ends of the default log-uniform range: six decades.
pub const SCALE_LO: f64 = 1e-3;
pub const SCALE_HI: f64 = 1e3;

/// FNV-1a, so that each check id gets its own stream family independently of
/// the standard library's hasher.
fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Per-sample random source. Every sample owns a ChaCha stream derived from
/// `(seed, id, region, index)`, so results do not depend on scheduling or on
/// the total budget. Named draws are recorded as the sample's parameters.
pub struct Sampler {
    rng: ChaCha8Rng,
    params: Vec<f64>,
}

impl Sampler {
    pub fn new(seed: u64, id: &str, region: usize, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(id));
        rng.set_stream(((region as u64) << 40) | index as u64);
        Sampler { rng, params: Vec::new() }
    }

    fn raw(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Records a derived value alongside the draws.
    pub fn note(&mut self, v: f64) {
        self.params.push(v);
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let v = lo + (hi - lo) * self.raw();
        self.note(v);
        v
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let v = (lo.ln() + (hi.ln() - lo.ln()) * self.raw()).exp();
        self.note(v);
        v
    }

    /// A positive scale spread over the default six decades.
    pub fn scale(&mut self) -> f64 {
        self.log_uniform(SCALE_LO, SCALE_HI)
    }

    /// One of `options`, recorded by value.
    pub fn pick<T: Copy + Into<f64>>(&mut self, options: &[T]) -> T {
        let i = ((self.raw() * options.len() as f64) as usize).min(options.len() - 1);
        self.note(options[i].into());
        options[i]
    }

    /// A tangential offset of length `len` in `R^{d-1}` with a uniform
    /// direction; empty for `d = 1`.
    pub fn tangential(&mut self, d: usize, len: f64) -> Vec<f64> {
        match d {
            1 => Vec::new(),
            2 => {
                let sign = if self.raw() < 0.5 { -1.0 } else { 1.0 };
                vec![sign * len]
            }
            _ => {
                // Gaussian direction via Box-Muller pairs.
                let mut v: Vec<f64> = Vec::with_capacity(d - 1);
                while v.len() < d - 1 {
                    let (u1, u2) = (1.0 - self.raw(), self.raw());
                    let m = (-2.0 * u1.ln()).sqrt();
                    v.push(m * (2.0 * PI * u2).cos());
                    v.push(m * (2.0 * PI * u2).sin());
                }
                v.truncate(d - 1);
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                v.iter().map(|c| c * len / n).collect()
            }
        }
    }

    /// Two points with heights and tangential separation log-uniform over
    /// six decades.
    pub fn pair(&mut self, d: usize) -> (HalfSpacePoint, HalfSpacePoint) {
        let xd = self.scale();
        let yd = self.scale();
        let offset = if d > 1 { self.scale() } else { 0.0 };
        self.pair_from(d, xd, yd, offset)
    }

    /// `x = (0, xd)` and `y = (offset·ω, yd)`.
    pub fn pair_from(&mut self, d: usize, xd: f64, yd: f64, offset: f64) -> (HalfSpacePoint, HalfSpacePoint) {
        let x = HalfSpacePoint::on_axis(d, xd).expect("positive height");
        let y = HalfSpacePoint::from_parts(&self.tangential(d, offset), yd).expect("positive height");
        (x, y)
    }

    /// Two points at distance `r` whose lower height is `lo`: the separation
    /// is split into vertical and tangential parts at a uniform angle.
    pub fn pair_at_distance(&mut self, d: usize, lo: f64, r: f64) -> (HalfSpacePoint, HalfSpacePoint) {
        let theta = if d == 1 { 0.0 } else { self.uniform(0.0, 0.5 * PI) };
        let (vertical, offset) = (r * theta.cos(), r * theta.sin());
        let (x, y) = self.pair_from(d, lo, lo + vertical, offset);
        if self.raw() < 0.5 {
            (x, y)
        } else {
            (y, x)
        }
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |region, index| Sampler::new(7, "demo", region, index).scale();
        assert_eq!(draw(0, 3), draw(0, 3));
        assert_ne!(draw(0, 3), draw(0, 4));
        assert_ne!(draw(0, 3), draw(1, 3));
        assert_ne!(Sampler::new(7, "demo", 0, 0).scale(), Sampler::new(7, "other", 0, 0).scale());
    }

    #[test]
    fn draws_stay_in_range_and_are_recorded() {
        let mut s = Sampler::new(1, "demo", 0, 0);
        for _ in 0..1000 {
            let v = s.scale();
            assert!((SCALE_LO..=SCALE_HI).contains(&v));
        }
        assert_eq!(s.into_params().len(), 1000);
    }

    #[test]
    fn pair_at_distance_is_exact() {
        for d in 1..=3 {
            let mut s = Sampler::new(3, "demo", 0, d);
            let (x, y) = s.pair_at_distance(d, 0.25, 2.0);
            assert!((distance(&x, &y) - 2.0).abs() < 1e-14);
            assert_eq!(x.height().min(y.height()), 0.25);
        }
    }
}
