mod common;

use std::collections::BTreeMap;

use livecase::argument::{
    compose, instantiate_oascf_template, soundness_status, validate_wellformed, CaseInterface,
    ElementStatus, EvidenceState, InterfaceTag, SpiState, TaggedStatement, TemplateParams,
};
use livecase::evidence::Freshness;
use livecase::spi::{
    detect_violations, evaluate_totals, FleetDirective, RemediationPolicy, SpiStatus, Timing,
    Window,
};
use livecase::SafetyCase;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

use common::*;

fn random_state(r: &mut impl Rng, case: &SafetyCase) -> (SpiState, EvidenceState) {
    let statuses = [
        SpiStatus::Pass,
        SpiStatus::PassLowConfidence,
        SpiStatus::Violated,
        SpiStatus::NoData,
    ];
    let spi = case
        .spis
        .iter()
        .map(|s| (s.id.clone(), *statuses.choose(r).unwrap()))
        .collect();
    let ev = case
        .evidence
        .iter()
        .map(|l| {
            (
                l.id.clone(),
                if r.random_bool(0.2) {
                    Freshness::Stale
                } else {
                    Freshness::Fresh
                },
            )
        })
        .collect();
    (spi, ev)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_arguments_are_well_formed_and_acyclic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..150);
        let case = random_argument(&mut r, n);
        prop_assert_eq!(validate_wellformed(&case).error_count(), 0);
        prop_assert!(case.index().topological_order().is_some());
    }

    #[test]
    fn no_supported_parent_above_an_unsupported_child(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..150);
        let case = random_argument(&mut r, n);
        let (spi, ev) = random_state(&mut r, &case);
        let st = soundness_status(&case, &spi, &ev).unwrap();
        for e in case.edges.iter().filter(|e| e.kind == livecase::argument::EdgeKind::SupportedBy) {
            if !st[&e.to].is_supported() {
                prop_assert!(!st[&e.from].is_supported(), "{} above {}", e.from, e.to);
            }
        }
    }

    #[test]
    fn lagging_violations_ground_the_fleet(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..150);
        let case = random_argument(&mut r, n);
        let (spi, ev) = random_state(&mut r, &case);
        let evals = case
            .spis
            .iter()
            .map(|s| {
                let mut e = evaluate_totals(s, 0, 1.0, Window::all());
                e.status = spi[&s.id];
                (s.id.clone(), e)
            })
            .collect();
        let d = detect_violations(&case, &evals, &ev, &RemediationPolicy::default()).unwrap();
        let lagging = case.spis.iter().any(|s| s.timing == Timing::Lagging && spi[&s.id] == SpiStatus::Violated);
        let any = spi.values().any(|s| *s == SpiStatus::Violated);
        let want = if lagging { FleetDirective::Ground } else if any { FleetDirective::Restrict } else { FleetDirective::Continue };
        prop_assert_eq!(d.directive, want);
    }

    #[test]
    fn template_always_validates(system in "[A-Za-z][A-Za-z0-9 -]{0,20}", odd in "[A-Za-z][A-Za-z0-9 -]{0,20}") {
        let case = instantiate_oascf_template(&TemplateParams::new(system, odd)).unwrap();
        prop_assert_eq!(validate_wellformed(&case).error_count(), 0);
    }

    #[test]
    fn composition_errors_match_brute_force_pairing(
        assumptions in prop::collection::vec((0usize..3, "[a-c ]{0,6}"), 0..10),
        guarantees in prop::collection::vec((0usize..3, "[a-cA-C ]{0,6}"), 0..10),
    ) {
        let tag = |i: usize| InterfaceTag::ALL[i];
        let child = SafetyCase {
            interface: Some(CaseInterface {
                assumptions: assumptions.iter().map(|(t, s)| TaggedStatement::new(tag(*t), s.clone())).collect(),
                guarantees: vec![],
            }),
            ..SafetyCase::new("child")
        };
        let parent = SafetyCase {
            interface: Some(CaseInterface {
                assumptions: vec![],
                guarantees: guarantees.iter().map(|(t, s)| TaggedStatement::new(tag(*t), s.clone())).collect(),
            }),
            ..SafetyCase::new("parent")
        };
        let matched = assumptions
            .iter()
            .filter(|(ta, sa)| guarantees.iter().any(|(tg, sg)| ta == tg && oracle_normalize(sa) == oracle_normalize(sg)))
            .count();
        prop_assert_eq!(compose(&parent, &child).unwrap().error_count(), assumptions.len() - matched);
    }
}

#[test]
fn seeded_defects_are_detected_by_their_rule() {
    let mut misses = BTreeMap::new();
    for (d, defect) in Defect::ALL.iter().enumerate() {
        for i in 0..20u64 {
            let mut r = rng(1000 * d as u64 + i);
            let n = r.random_range(3..80);
            let base = random_argument(&mut r, n);
            let (mutant, rule) = seed_defect(&mut r, &base, *defect);
            assert_eq!(validate_wellformed(&base).with_rule(rule).count(), 0);
            if validate_wellformed(&mutant).with_rule(rule).count() == 0 {
                *misses.entry(format!("{defect:?}")).or_insert(0) += 1;
            }
        }
    }
    assert!(misses.is_empty(), "{misses:?}");
}

#[test]
fn status_of_every_element_is_reported() {
    let case = random_argument(&mut rng(7), 60);
    let (spi, ev) = random_state(&mut rng(8), &case);
    let st = soundness_status(&case, &spi, &ev).unwrap();
    assert_eq!(st.len(), case.elements.len());
    assert!(st.values().all(|s| matches!(
        s,
        ElementStatus::Supported
            | ElementStatus::InQuestion
            | ElementStatus::Violated
            | ElementStatus::Stale
    )));
}
