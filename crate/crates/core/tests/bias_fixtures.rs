//! Fixtures on which the entropy-based criteria disagree about the argmax.
#![allow(clippy::excessive_precision)]

mod common;

use common::{id_trap, unbalance_trap};
use treegain::best_split;
use treegain::impurity::Criterion;
use treegain::splitter::RuleKind;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn information_gain_takes_the_identifier() {
    let d = id_trap();
    let s = best_split(&d.view(), Criterion::InformationGain).unwrap();
    assert_eq!(s.rule.feature, 0);
    assert_eq!(s.arity, 12);
    assert!(close(s.score.value, 1.0));
}

#[test]
fn normalised_criteria_take_the_signal() {
    let d = id_trap();
    let gr = best_split(&d.view(), Criterion::GainRatio).unwrap();
    assert_eq!(gr.rule.feature, 1);
    assert!(close(gr.score.value, 0.668311487004697));
    let bgr = best_split(&d.view(), Criterion::BalancedGainRatio).unwrap();
    assert_eq!(bgr.rule.feature, 1);
    assert!(close(bgr.score.value, 0.330758058395059));
    assert!(close(bgr.score.gain, 0.654857545826976));
}

#[test]
fn gain_ratio_isolates_a_pure_singleton() {
    let d = unbalance_trap();
    let s = best_split(&d.view(), Criterion::GainRatio).unwrap();
    assert_eq!(s.rule.kind, RuleKind::Threshold(1.5));
    assert_eq!(s.child_sizes, [1, 7]);
    assert!(close(s.score.value, 0.25374246365004395669));
}

#[test]
fn balanced_gain_ratio_prefers_the_even_cut() {
    let d = unbalance_trap();
    let s = best_split(&d.view(), Criterion::BalancedGainRatio).unwrap();
    assert_eq!(s.rule.kind, RuleKind::Threshold(4.5));
    assert_eq!(s.child_sizes, [4, 4]);
    assert!(close(s.score.value, 0.094360937770433568045));
}
