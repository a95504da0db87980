use std::f64::consts::E;

use crate::error::{DklError, DklResult};

/// `f(r) = r^γ log^{η1}(e + k/r) log^{η2}(e + r/l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPowerProfile {
    pub gamma: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub k: f64,
    pub l: f64,
}

impl LogPowerProfile {
    pub fn new(gamma: f64, eta1: f64, eta2: f64, k: f64, l: f64) -> DklResult<Self> {
        if [gamma, eta1, eta2].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(DklError::domain("profile exponents must be finite and non-negative"));
        }
        if !(k > 0.0 && l > 0.0) || !k.is_finite() || !l.is_finite() {
            return Err(DklError::domain("profile scales must be positive"));
        }
        Ok(LogPowerProfile { gamma, eta1, eta2, k, l })
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        self.ln_evaluate(r).exp()
    }

    pub fn ln_evaluate(&self, r: f64) -> f64 {
        let mut v = 0.0;
        if self.gamma != 0.0 {
            v += self.gamma * r.ln();
        }
        if self.eta1 != 0.0 {
            v += self.eta1 * (E + self.k / r).ln().ln();
        }
        if self.eta2 != 0.0 {
            v += self.eta2 * (E + r / self.l).ln().ln();
        }
        v
    }

    /// `f(ar) / f(r)`, formed in log space.
    pub fn ratio(&self, a: f64, r: f64) -> f64 {
        (self.ln_evaluate(a * r) - self.ln_evaluate(r)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power() {
        let f = LogPowerProfile::new(1.5, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!((f.evaluate(4.0) - 8.0).abs() < 1e-14);
        assert!((f.ratio(4.0, 0.3) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn log_factors() {
        let f = LogPowerProfile::new(0.0, 2.0, 1.0, 3.0, 0.5).unwrap();
        let r: f64 = 1.5;
        let expect = (E + 2.0).ln().powi(2) * (E + 3.0).ln();
        assert!((f.evaluate(r) / expect - 1.0).abs() < 1e-14);
        assert!(LogPowerProfile::new(-1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(LogPowerProfile::new(1.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }
}
