//! Experiment harness: exact averages against direct enumeration, and
//! determinism of the Monte Carlo reports.

use maxent_donut::experiments::*;
use maxent_donut::graph::{build_kdonut, shortest_path_metric};
use maxent_donut::matching::{odd_vertices, structural_matchings};
use maxent_donut::sampler::enumerate_one_trees;
use num_rational::Ratio;

fn exhaustive(k: usize, epsilon: Option<f64>) -> ExperimentReport {
    let mut cfg = ExperimentConfig::new(k, 0, 0);
    cfg.exhaustive = true;
    cfg.epsilon = epsilon;
    estimate_ratio(&cfg).unwrap()
}

/// (exact mean of min(c(M1), c(M2)), exact fraction with both >= floor)
fn enumerate_matchings(k: usize, floor: u64) -> (Ratio<u64>, Ratio<u64>) {
    let g = build_kdonut(k).unwrap();
    let m = shortest_path_metric(&g);
    let (mut total, mut both, mut n) = (0, 0, 0);
    for t in enumerate_one_trees(&g).unwrap() {
        let s = structural_matchings(&odd_vertices(&t, &g).unwrap(), &m).unwrap();
        total += s.min_cost();
        both += u64::from(s.m1.cost >= floor && s.m2.cost >= floor);
        n += 1;
    }
    (Ratio::new(total, n), Ratio::new(both, n))
}

#[test]
fn exhaustive_k3_is_exact() {
    let r = exhaustive(3, Some(1.0 / 6.0));
    let (mean_matching, both) = enumerate_matchings(3, 4);
    let expected = (Ratio::from_integer(14) + mean_matching) / 14;
    let exact = r.exact.as_ref().unwrap();
    assert_eq!(exact.ratio_euler, expected.to_string());
    assert_eq!(exact.concentration.as_deref(), Some(both.to_string().as_str()));
    assert!(expected < Ratio::new(11, 8));
    assert_eq!(r.trials, 128);
}

#[test]
fn exhaustive_means_are_three_halves_k() {
    for k in 3..=5 {
        let r = exhaustive(k, None);
        let exact = r.exact.unwrap();
        let expected = Ratio::new(3 * k as u64, 2).to_string();
        assert_eq!(exact.mean_m1_cost, expected);
        assert_eq!(exact.mean_m2_cost, expected);
        assert!(r.max_shortcut_loss <= 9);
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let mut cfg = ExperimentConfig::new(30, 400, 9);
    cfg.threads = Some(1);
    let one = serde_json::to_string(&estimate_ratio(&cfg).unwrap()).unwrap();
    cfg.threads = Some(3);
    let three = serde_json::to_string(&estimate_ratio(&cfg).unwrap()).unwrap();
    assert_eq!(one, three);
    cfg.threads = None;
    assert_eq!(one, serde_json::to_string(&estimate_ratio(&cfg).unwrap()).unwrap());
}

#[test]
fn ratios_stay_below_the_expectation_bound() {
    for k in [3, 10, 40, 100] {
        let r = estimate_ratio(&ExperimentConfig::new(k, 500, 1)).unwrap();
        let bound = (5.5 * k as f64 + 2.0) / (4.0 * k as f64 + 2.0);
        assert!((1.0..=1.5).contains(&r.ratio_euler));
        assert!(r.ratio_shortcut <= r.ratio_euler);
        assert!(r.ratio_euler < bound + 3.0 * r.std_error, "k={k}");
        assert!((r.ratio_euler - r.mean_euler_cost / (4 * k + 2) as f64).abs() < 1e-15);
    }
}

#[test]
fn oracle_mode_agrees_with_structural() {
    let mut cfg = ExperimentConfig::new(6, 300, 4);
    cfg.policy = TourPolicy::Hierholzer;
    let structural = estimate_ratio(&cfg).unwrap();
    cfg.matching = MatchingMode::Oracle;
    let oracle = estimate_ratio(&cfg).unwrap();
    assert_eq!(oracle.claim2_mismatches, Some(0));
    assert_eq!(structural.claim2_mismatches, None);
    assert_eq!(oracle.mean_euler_cost, structural.mean_euler_cost);
}

#[test]
fn wide_epsilon_always_concentrates() {
    assert_eq!(concentration_check(50, 300, 0.4999, 2).unwrap(), 1.0);
}
