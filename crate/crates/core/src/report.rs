//! Ratio-extreme reports for empirical comparability checks.

use crate::error::DklResult;

/// Which inequality a check asserts, for `ratio = LHS / RHS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    /// `1/c <= ratio <= c`.
    TwoSided,
    /// `ratio <= c`.
    Upper,
    /// `ratio >= 1/c`.
    Lower,
}

impl Sidedness {
    pub fn name(self) -> &'static str {
        match self {
            Sidedness::TwoSided => "two-sided",
            Sidedness::Upper => "upper",
            Sidedness::Lower => "lower",
        }
    }
}

/// Largest tolerated fraction of samples excluded for numerical failure.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparabilityReport {
    pub lemma_id: String,
    pub sidedness: Sidedness,
    /// Samples drawn, including excluded ones.
    pub samples: usize,
    pub excluded: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    pub ceiling: f64,
    pub pass: bool,
    /// Per-region breakdown, when the admissible region is a union.
    pub regions: Vec<ComparabilityReport>,
}

impl ComparabilityReport {
    /// Builds a report from per-sample `(parameters, ratio)` results, in
    /// sample order. Failed or non-finite ratios count as exclusions.
    pub fn from_samples(
        lemma_id: impl Into<String>,
        sidedness: Sidedness,
        ceiling: f64,
        results: Vec<(Vec<f64>, DklResult<f64>)>,
    ) -> Self {
        let samples = results.len();
        let mut excluded = 0;
        let mut min = (f64::INFINITY, Vec::new());
        let mut max = (f64::NEG_INFINITY, Vec::new());
        for (params, r) in results {
            match r {
                Ok(v) if v.is_finite() && v >= 0.0 => {
                    if v < min.0 {
                        min = (v, params.clone());
                    }
                    if v > max.0 {
                        max = (v, params);
                    }
                }
                _ => excluded += 1,
            }
        }
        let mut report = ComparabilityReport {
            lemma_id: lemma_id.into(),
            sidedness,
            samples,
            excluded,
            min_ratio: min.0,
            max_ratio: max.0,
            argmin: min.1,
            argmax: max.1,
            ceiling,
            pass: false,
            regions: Vec::new(),
        };
        report.pass = report.evaluate_pass();
        report
    }

    /// Merges region reports into one, keeping them as the breakdown.
    pub fn from_regions(
        lemma_id: impl Into<String>,
        sidedness: Sidedness,
        ceiling: f64,
        regions: Vec<ComparabilityReport>,
    ) -> Self {
        let mut report = ComparabilityReport {
            lemma_id: lemma_id.into(),
            sidedness,
            samples: regions.iter().map(|r| r.samples).sum(),
            excluded: regions.iter().map(|r| r.excluded).sum(),
            min_ratio: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            argmin: Vec::new(),
            argmax: Vec::new(),
            ceiling,
            pass: false,
            regions: Vec::new(),
        };
        for r in &regions {
            if r.min_ratio < report.min_ratio {
                report.min_ratio = r.min_ratio;
                report.argmin = r.argmin.clone();
            }
            if r.max_ratio > report.max_ratio {
                report.max_ratio = r.max_ratio;
                report.argmax = r.argmax.clone();
            }
        }
        report.regions = regions;
        report.pass = report.evaluate_pass();
        report
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        for r in &mut self.regions {
            r.ceiling = ceiling;
            r.pass = r.evaluate_pass();
        }
        self.pass = self.evaluate_pass();
        self
    }

    /// Fraction of samples excluded.
    pub fn excluded_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.excluded as f64 / self.samples as f64
        }
    }

    /// The constant this run would need: the smallest `c` with which it passes.
    pub fn required_constant(&self) -> f64 {
        if !self.regions.is_empty() {
            return self.regions.iter().map(|r| r.required_constant()).fold(0.0, f64::max);
        }
        match self.sidedness {
            Sidedness::TwoSided => self.max_ratio.max(1.0 / self.min_ratio),
            Sidedness::Upper => self.max_ratio,
            Sidedness::Lower => 1.0 / self.min_ratio,
        }
    }

    /// With a region breakdown every region must pass on its own; the merged
    /// extremes are informational.
    fn evaluate_pass(&self) -> bool {
        if self.samples == self.excluded || self.excluded_fraction() > MAX_EXCLUDED_FRACTION {
            return false;
        }
        if !self.regions.is_empty() {
            return self.regions.iter().all(|r| r.pass);
        }
        let c = self.ceiling;
        let upper_ok = self.max_ratio <= c;
        let lower_ok = self.min_ratio >= 1.0 / c;
        match self.sidedness {
            Sidedness::TwoSided => upper_ok && lower_ok,
            Sidedness::Upper => upper_ok,
            Sidedness::Lower => lower_ok,
        }
    }
}
