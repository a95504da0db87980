//! Sampled numerical checks of the comparability lemmas behind the
//! estimates. Each check draws parameter tuples from the lemma's admissible
//! region, evaluates both sides (quadrature for integrals, closed forms
//! otherwise) and reports the extremes of `LHS / RHS` against a frozen
//! ceiling.

mod ceilings;
mod extras;
mod lemmas;
mod polar;
mod profile;
mod sampler;

use rayon::prelude::*;

use crate::error::{DklError, DklResult};
use crate::quadrature::QuadratureSpec;
use crate::report::{ComparabilityReport, Sidedness};

pub use ceilings::{freeze_value, frozen_ceilings, Ceilings};
pub use polar::half_space_polar;
pub use profile::LogPowerProfile;
pub use sampler::{Sampler, SCALE_HI, SCALE_LO};

/// The lemma registry, in the order `check all` runs it.
pub const LEMMA_IDS: [&str; 16] = [
    "slowly_varying",
    "slowly_varying_2",
    "kill_log",
    "kill_log_2",
    "cal_00",
    "cal_0",
    "l_cal1",
    "cal_new1",
    "cal_new2",
    "cal_basic",
    "cal_2",
    "cal_3",
    "cal_green",
    "comp_AB",
    "two_jump_region",
    "lower_2",
];

/// Further sampled comparisons of the estimators themselves, with frozen
/// ceilings in the same file.
pub const EXTRA_IDS: [&str; 10] = [
    "hke_unified_one_jump",
    "hke_unified_two_jump",
    "hke_unified_critical",
    "regime_consistency",
    "near_diagonal",
    "wtb_interior",
    "ball_d1",
    "ball_d2",
    "bessel_bound",
    "green",
];

/// Evaluates one sample: draws through the sampler, returns `LHS / RHS`.
pub(crate) type SampleFn = Box<dyn Fn(&mut Sampler, &QuadratureSpec) -> DklResult<f64> + Send + Sync>;

pub(crate) struct Region {
    pub name: String,
    pub sidedness: Sidedness,
    pub sample: SampleFn,
}

pub(crate) fn region<F>(name: impl Into<String>, sidedness: Sidedness, f: F) -> Region
where
    F: Fn(&mut Sampler, &QuadratureSpec) -> DklResult<f64> + Send + Sync + 'static,
{
    Region { name: name.into(), sidedness, sample: Box::new(f) }
}

pub(crate) struct Definition {
    pub sidedness: Sidedness,
    pub regions: Vec<Region>,
}

fn definition(id: &str) -> DklResult<Definition> {
    lemmas::definition(id).or_else(|| extras::definition(id)).ok_or_else(|| DklError::UnknownId(id.to_string()))
}

pub fn is_known(id: &str) -> bool {
    LEMMA_IDS.contains(&id) || EXTRA_IDS.contains(&id)
}

/// `LHS / RHS`, with degenerate sides reported as a numerical failure.
pub(crate) fn ratio(lhs: f64, rhs: f64) -> DklResult<f64> {
    if !(rhs > 0.0) || !rhs.is_finite() || !(lhs >= 0.0) || !lhs.is_finite() {
        return Err(DklError::Divergent(format!("degenerate ratio {lhs:e} / {rhs:e}")));
    }
    Ok(lhs / rhs)
}

/// Runs a check without a ceiling (every report passes unless samples are
/// excluded); the exploration phase that the frozen ceilings come from.
///
/// The budget is split evenly over the regions. Sample `i` of region `j`
/// always sees the same random stream, so a smaller budget evaluates a
/// subset of the samples of a larger one.
pub fn explore(id: &str, seed: u64, budget: usize, spec: &QuadratureSpec) -> DklResult<ComparabilityReport> {
    let def = definition(id)?;
    if budget == 0 {
        return Err(DklError::domain("budget must be positive"));
    }
    let n = def.regions.len();
    let reports: Vec<ComparabilityReport> = def
        .regions
        .iter()
        .enumerate()
        .map(|(j, region)| {
            let count = budget / n + usize::from(j < budget % n);
            let results: Vec<_> = (0..count)
                .into_par_iter()
                .map(|i| {
                    let mut s = Sampler::new(seed, id, j, i);
                    let r = (region.sample)(&mut s, spec);
                    (s.into_params(), r)
                })
                .collect();
            let name = if n == 1 { id.to_string() } else { format!("{id}/{}", region.name) };
            ComparabilityReport::from_samples(name, region.sidedness, f64::INFINITY, results)
        })
        .collect();
    if n == 1 {
        return Ok(reports.into_iter().next().expect("one region"));
    }
    Ok(ComparabilityReport::from_regions(id, def.sidedness, f64::INFINITY, reports))
}

/// Runs a check against the checked-in ceiling for `id`.
pub fn check(id: &str, seed: u64, budget: usize, spec: &QuadratureSpec) -> DklResult<ComparabilityReport> {
    let ceiling = frozen_ceilings().get(id)?;
    check_with_ceiling(id, seed, budget, spec, ceiling)
}

pub fn check_with_ceiling(
    id: &str,
    seed: u64,
    budget: usize,
    spec: &QuadratureSpec,
    ceiling: f64,
) -> DklResult<ComparabilityReport> {
    Ok(explore(id, seed, budget, spec)?.with_ceiling(ceiling))
}
