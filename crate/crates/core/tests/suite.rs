use dkl_core::quadrature::QuadratureSpec;
use dkl_core::suite::{check, explore, frozen_ceilings, is_known, EXTRA_IDS, LEMMA_IDS};
use dkl_core::DklError;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn every_id_has_a_frozen_ceiling() {
    for id in LEMMA_IDS.iter().chain(EXTRA_IDS.iter()) {
        assert!(is_known(id));
        let c = frozen_ceilings().get(id).unwrap();
        assert!(c >= 1.0 && c.is_finite(), "{id}: {c}");
    }
    for id in ["oracle_g0.5_a1_d1", "oracle_g0_a0.6_d1", "oracle_g1_a1.4_d1"] {
        assert!(frozen_ceilings().get(id).is_ok(), "{id}");
    }
}

#[test]
fn unknown_ids_are_rejected() {
    assert!(matches!(explore("nope", 0, 10, &spec()), Err(DklError::UnknownId(_))));
    assert!(!is_known("oracle_g0.5_a1_d1"));
}

#[test]
fn smaller_budgets_see_a_subset() {
    let small = explore("cal_basic", 5, 50, &spec()).unwrap();
    let large = explore("cal_basic", 5, 200, &spec()).unwrap();
    assert!(large.min_ratio <= small.min_ratio && large.max_ratio >= small.max_ratio);
    assert_eq!(small, explore("cal_basic", 5, 50, &spec()).unwrap());
    assert_ne!(small, explore("cal_basic", 6, 50, &spec()).unwrap());
}

/// Doubling the quadrature tolerance must not move the observed extremes by
/// more than 5%: the ratios reflect the inequalities, not quadrature error.
#[test]
fn extremes_are_stable_under_tolerance_doubling() {
    let loose = spec().with_rel_tol(2.0 * spec().rel_tol);
    for id in ["kill_log", "cal_0", "cal_2", "lower_2", "green"] {
        let a = explore(id, 9, 90, &spec()).unwrap();
        let b = explore(id, 9, 90, &loose).unwrap();
        for (x, y) in [(a.min_ratio, b.min_ratio), (a.max_ratio, b.max_ratio)] {
            assert!((x / y - 1.0).abs() < 0.05, "{id}: {x} vs {y}");
        }
    }
}

#[test]
fn checks_use_the_frozen_ceiling() {
    let r = check("bessel_bound", 1, 60, &spec()).unwrap();
    assert_eq!(r.ceiling, frozen_ceilings().get("bessel_bound").unwrap());
    assert!(r.pass);
    assert!(r.regions.iter().all(|g| g.ceiling == r.ceiling));
}
