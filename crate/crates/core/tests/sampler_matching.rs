//! Parity independence, sampler uniformity, and the matching structure,
//! checked by enumeration and against brute force.

use maxent_donut::graph::{build_kdonut, shortest_path_metric, Metric};
use maxent_donut::lp::extreme_point;
use maxent_donut::matching::{odd_vertices, oracle_min_matching, structural_matchings, MatchingKind};
use maxent_donut::sampler::{
    enumerate_one_trees, one_tree_from_choices, parity_vector, sample_one_tree, ChaChaBits, ChoiceVector,
};
use num_rational::Ratio;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn parity_vectors_are_uniform_and_one_per_pair() {
    for k in 3..=5 {
        let g = build_kdonut(k).unwrap();
        let mut counts = vec![0u32; 1 << (2 * k)];
        for t in enumerate_one_trees(&g).unwrap() {
            let p = parity_vector(&t, &g).unwrap();
            for i in 0..g.ring_len() {
                let odd_u = t.degree(g.outer(i)) % 2 == 1;
                let odd_v = t.degree(g.inner(i)) % 2 == 1;
                assert!(odd_u != odd_v);
                assert_eq!(p.bits()[i], odd_u);
            }
            counts[p.index() as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c == 2), "k={k}");
    }
}

#[test]
fn every_one_tree_is_valid_and_in_the_support() {
    for k in 3..=6 {
        let g = build_kdonut(k).unwrap();
        let x = extreme_point(&g);
        for t in enumerate_one_trees(&g).unwrap() {
            t.check(&g).unwrap();
            assert_eq!(t.cost(), 4 * k as u64 + 2);
            assert!(t.contains(g.e_plus()));
            assert!(t.edges().iter().all(|&e| x.halves(e) > 0));
        }
    }
}

#[test]
fn sampler_is_uniform_over_choice_vectors() {
    let g = build_kdonut(3).unwrap();
    let cells = 1usize << 7;
    let n = 100_000u64;
    let mut counts = vec![0u64; cells];
    for i in 0..n {
        let t = sample_one_tree(&g, &mut ChaChaBits::new(11, i));
        counts[t.choice().index() as usize] += 1;
    }
    let expected = n as f64 / cells as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn structural_matchings_are_optimal() {
    for k in 3..=5 {
        let g = build_kdonut(k).unwrap();
        let m = shortest_path_metric(&g);
        for t in enumerate_one_trees(&g).unwrap() {
            let odds = odd_vertices(&t, &g).unwrap();
            let s = structural_matchings(&odds, &m).unwrap();
            let best = oracle_min_matching(&odds, &m).unwrap();
            assert_eq!(best.cost, s.min_cost(), "{}", t.choice());
            assert_eq!(s.m1.kind, MatchingKind::M1);
            assert_eq!(s.m2.kind, MatchingKind::M2);
        }
    }
}

#[test]
fn structural_matching_means_are_three_halves_k() {
    for k in 3..=5u64 {
        let g = build_kdonut(k as usize).unwrap();
        let m = shortest_path_metric(&g);
        let (mut c1, mut c2, mut n) = (0u64, 0u64, 0u64);
        for t in enumerate_one_trees(&g).unwrap() {
            let s = structural_matchings(&odd_vertices(&t, &g).unwrap(), &m).unwrap();
            c1 += s.m1.cost;
            c2 += s.m2.cost;
            n += 1;
        }
        assert_eq!(Ratio::new(c1, n), Ratio::new(3 * k, 2));
        assert_eq!(Ratio::new(c2, n), Ratio::new(3 * k, 2));
    }
}

fn brute_force_matching(odds: &[usize], m: &Metric) -> u64 {
    if odds.is_empty() {
        return 0;
    }
    (1..odds.len())
        .map(|j| {
            let rest: Vec<usize> = odds[1..]
                .iter()
                .enumerate()
                .filter(|&(i, _)| i + 1 != j)
                .map(|(_, &v)| v)
                .collect();
            u64::from(m.dist(odds[0], odds[j])) + brute_force_matching(&rest, m)
        })
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn choice_vectors_round_trip(k in 3usize..12, raw in any::<u64>()) {
        let index = raw & ((1u64 << (2 * k + 1)) - 1);
        let c = ChoiceVector::from_index(k, index);
        prop_assert_eq!(c.index(), index);
        let parsed: ChoiceVector = c.to_string().parse().unwrap();
        prop_assert_eq!(parsed, c);
    }

    #[test]
    fn oracle_matches_brute_force(k in 3usize..6, mask in any::<u64>(), size in 1usize..6) {
        let g = build_kdonut(k).unwrap();
        let m = shortest_path_metric(&g);
        let n = g.vertex_count();
        let picked: Vec<usize> = (0..n).filter(|&v| (mask >> (v % 64)) & 1 == 1).take(2 * size).collect();
        prop_assume!(picked.len().is_multiple_of(2));
        prop_assert_eq!(oracle_min_matching(&picked, &m).unwrap().cost, brute_force_matching(&picked, &m));
    }

    #[test]
    fn sampled_trees_have_one_odd_vertex_per_pair(k in 3usize..40, seed in any::<u64>()) {
        let g = build_kdonut(k).unwrap();
        let t = sample_one_tree(&g, &mut ChaChaBits::new(seed, 0));
        prop_assert!(parity_vector(&t, &g).is_ok());
        let again = one_tree_from_choices(&g, t.choice().clone()).unwrap();
        prop_assert_eq!(again.edges(), t.edges());
    }
}
