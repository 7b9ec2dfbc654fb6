mod common;

use std::collections::BTreeSet;

use livecase::fault_tree::{
    allocate_budget, factored_probability, inclusion_exclusion_probability, minimal_cut_sets,
    minimal_cut_sets_with, top_probability, top_probability_with, QuantitativeFaultTree,
};
use livecase::Exec;
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn tree(seed: u64, max_events: usize) -> QuantitativeFaultTree {
    random_tree(&mut rng(seed), max_events)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn top_probability_matches_enumeration(seed in any::<u64>()) {
        let t = tree(seed, 12);
        let want = enumeration_probability(&t.top);
        let got = top_probability(&t).unwrap();
        prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn every_exact_method_agrees(seed in any::<u64>()) {
        let t = tree(seed, 10);
        let want = enumeration_probability(&t.top);
        prop_assert!((factored_probability(&t).unwrap() - want).abs() <= 1e-12);
        if minimal_cut_sets(&t).unwrap().len() <= 20 {
            prop_assert!((inclusion_exclusion_probability(&t).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn cut_sets_match_indicator_oracle(seed in any::<u64>()) {
        let t = tree(seed, 10);
        prop_assert_eq!(minimal_cut_sets(&t).unwrap(), oracle_cut_sets(&t.top));
    }

    #[test]
    fn top_event_iff_a_cut_set_is_contained(seed in any::<u64>(), mask in any::<u64>()) {
        let t = tree(seed, 10);
        let ids: Vec<String> = event_rates(&t.top).into_keys().collect();
        let up: BTreeSet<&str> = ids.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| s.as_str()).collect();
        let cuts = minimal_cut_sets(&t).unwrap();
        let covered = cuts.iter().any(|c| c.iter().all(|e| up.contains(e.as_str())));
        prop_assert_eq!(structure(&t.top, &up), covered);
    }

    #[test]
    fn raising_a_rate_never_lowers_the_top(seed in any::<u64>(), pick in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
        let t = tree(seed, 12);
        let rates = event_rates(&t.top);
        let ids: Vec<&String> = rates.keys().collect();
        let id = pick.get(&ids).to_string();
        let raised = rates[&id] + (1.0 - rates[&id]) * bump;
        let mut u = t.clone();
        u.top = map_rates(&t.top, &|e| if e == id { raised } else { rates[e] });
        prop_assert!(top_probability(&u).unwrap() >= top_probability(&t).unwrap() - 1e-15);
    }

    #[test]
    fn top_lies_between_cut_set_bounds(seed in any::<u64>()) {
        let t = tree(seed, 12);
        let rates = event_rates(&t.top);
        let cuts = minimal_cut_sets(&t).unwrap();
        let products: Vec<f64> = cuts.iter().map(|c| c.iter().map(|e| rates[e]).product()).collect();
        let lower = products.iter().cloned().fold(0.0, f64::max);
        let upper: f64 = products.iter().sum();
        let p = top_probability(&t).unwrap();
        prop_assert!(lower <= p + 1e-12 && p <= upper + 1e-12, "{lower} <= {p} <= {upper}");
    }

    #[test]
    fn allocated_budgets_meet_the_target(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_tree(&mut r, 12);
        let target = 10f64.powf(-r.random_range(0.3..8.0));
        let budgets = allocate_budget(&t, target).unwrap();
        let mut u = t.clone();
        u.top = map_rates(&t.top, &|e| budgets[e]);
        let p = top_probability(&u).unwrap();
        prop_assert!(p <= target, "{p} > {target}");
    }

    #[test]
    fn sequential_and_parallel_agree(seed in any::<u64>()) {
        let t = tree(seed, 14);
        for exec in Exec::available() {
            prop_assert_eq!(minimal_cut_sets_with(&t, exec).unwrap(), minimal_cut_sets_with(&t, Exec::Sequential).unwrap());
            prop_assert_eq!(top_probability_with(&t, exec).unwrap().to_bits(), top_probability_with(&t, Exec::Sequential).unwrap().to_bits());
        }
    }
}
