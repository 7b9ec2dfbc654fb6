use std::collections::BTreeMap;

use livecase::fixtures::{load_fixture, FIXTURE_NAMES};
use livecase::hazard::{trace_check, HazardError, HazardStatus};
use livecase::spi::{evaluate_all, SpiEvaluation, DEFAULT_ALPHA};
use livecase::Exec;

fn evaluations(name: &str) -> (livecase::fixtures::FixtureSet, Vec<SpiEvaluation>) {
    let fx = load_fixture(name).unwrap();
    let evals = evaluate_all(
        &fx.case.spis,
        &fx.telemetry,
        &BTreeMap::new(),
        Exec::Sequential,
    )
    .into_values()
    .map(Result::unwrap)
    .collect();
    (fx, evals)
}

#[test]
fn trace_check_is_deterministic() {
    for name in FIXTURE_NAMES {
        let fx = load_fixture(name).unwrap();
        let a = trace_check(
            &fx.hazard_log,
            &fx.case,
            &fx.case.fault_trees,
            &fx.risk_matrix,
        );
        let b = trace_check(
            &fx.hazard_log,
            &fx.case,
            &fx.case.fault_trees,
            &fx.risk_matrix,
        );
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn hazard_log_round_trips_through_toml() {
    for name in FIXTURE_NAMES {
        let fx = load_fixture(name).unwrap();
        let again =
            livecase::hazard::HazardLog::from_toml_str(&fx.hazard_log.to_toml_string()).unwrap();
        assert_eq!(again, fx.hazard_log, "{name}");
    }
}

#[test]
fn validation_needs_non_deviating_field_data() {
    let (fx, evals) = evaluations("deviation_demo");
    let mut log = fx.hazard_log.clone();
    assert_eq!(log.hazard("H_OBST").unwrap().status, HazardStatus::Verified);
    let err = log
        .transition(
            "H_OBST",
            HazardStatus::Validated,
            &fx.case,
            &evals,
            DEFAULT_ALPHA,
        )
        .unwrap_err();
    assert!(matches!(err, HazardError::NotValidated { .. }), "{err}");
    assert_eq!(log.hazard("H_OBST").unwrap().status, HazardStatus::Verified);
    assert!(log
        .transition(
            "H_OBST",
            HazardStatus::Validated,
            &fx.case,
            &[],
            DEFAULT_ALPHA
        )
        .is_err());
}

#[test]
fn consistent_field_data_allows_validation() {
    let (fx, evals) = evaluations("sotif_pedestrian");
    let mut log = fx.hazard_log.clone();
    let id = log.hazards[0].id.clone();
    while let Some(next) = log.hazard(&id).unwrap().status.next() {
        log.transition(&id, next, &fx.case, &evals, DEFAULT_ALPHA)
            .unwrap();
    }
    assert_eq!(log.hazard(&id).unwrap().status, HazardStatus::Validated);
    // Skipping a step is refused; reopening is always allowed.
    log.transition(&id, HazardStatus::Open, &fx.case, &evals, DEFAULT_ALPHA)
        .unwrap();
    assert!(log
        .transition(&id, HazardStatus::Verified, &fx.case, &evals, DEFAULT_ALPHA)
        .is_err());
}
