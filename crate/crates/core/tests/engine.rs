mod common;

use proptest::prelude::*;

use geofind::initial_facts;
use geofind::rules::{saturate, saturate_with, Budget, SaturationOptions, StopReason};

use common::{default_rules, examples, random_construction};

#[test]
fn rule_order_does_not_matter() {
    let rules = default_rules();
    let mut reversed = rules.clone();
    reversed.reverse();
    let mut rotated = rules.clone();
    rotated.rotate_left(5);
    for (name, c) in examples() {
        let d0 = initial_facts(&c);
        let base = saturate(&d0, &rules, Budget::default());
        for other in [&reversed, &rotated] {
            let s = saturate(&d0, other, Budget::default());
            assert_eq!(s.facts, base.facts, "{name}");
            assert_eq!(s.dag, base.dag, "{name}");
        }
    }
}

#[test]
fn round_budget_truncates_the_chain() {
    let c = &examples()[2].1;
    let d0 = initial_facts(c);
    let rules = default_rules();
    let full = saturate(&d0, &rules, Budget::default());
    assert!(full.rounds >= 3);
    let short = saturate(
        &d0,
        &rules,
        Budget {
            max_rounds: 2,
            ..Default::default()
        },
    );
    assert_eq!(short.stop_reason, StopReason::Budget);
    assert_eq!(short.rounds, 2);
    assert!(short.facts.is_subset(&full.facts));
    assert!(short.facts.iter().all(|(_, g)| g <= 2));
    let capped = saturate(
        &d0,
        &rules,
        Budget {
            max_facts: d0.len() + 1,
            ..Default::default()
        },
    );
    assert_eq!(capped.stop_reason, StopReason::Budget);
    assert_eq!(capped.facts.len(), d0.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fuzz_rule_order_and_strictness(seed in 0u64..100_000) {
        let c = random_construction(seed, 8);
        let d0 = initial_facts(&c);
        let rules = default_rules();
        let mut reversed = rules.clone();
        reversed.reverse();
        let base = saturate(&d0, &rules, Budget::default());
        let other = saturate(&d0, &reversed, Budget::default());
        prop_assert_eq!(&other.facts, &base.facts);
        prop_assert_eq!(&other.dag, &base.dag);
        prop_assert!(d0.is_subset(&base.facts));

        let strict = saturate_with(&d0, &rules, SaturationOptions { strict_sides: true, ..Default::default() });
        prop_assert!(strict.facts.is_subset(&base.facts));
        prop_assert!(strict.dag.iter().all(|(_, n)| !n.conditional));
    }
}
