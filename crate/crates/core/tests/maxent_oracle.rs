//! The sampler's 1-tree distribution against a numerical max-entropy solve
//! over every spanning tree of the k = 3 support.

use maxent_donut::graph::{build_kdonut, KDonut};
use maxent_donut::lp::extreme_point;
use maxent_donut::maxent_oracle::*;
use maxent_donut::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    g: KDonut,
    sg: SupportGraph,
    trees: Vec<TreeMask>,
    solved: MaxEntropySolution,
}

fn setup() -> Setup {
    let g = build_kdonut(3).unwrap();
    let x = extreme_point(&g);
    let sg = SupportGraph::for_kdonut(&g, &x).unwrap();
    let trees = enumerate_spanning_trees(&sg);
    let solved = solve_max_entropy(&sg, &trees, &SolverOptions::default()).unwrap();
    Setup { g, sg, trees, solved }
}

fn blocks(g: &KDonut) -> Vec<Vec<usize>> {
    (1..g.ring_len())
        .step_by(2)
        .map(|i| vec![g.outer(i), g.inner(i), g.outer(i + 1), g.inner(i + 1)])
        .collect()
}

#[test]
fn enumeration_matches_matrix_tree_theorem() {
    let s = setup();
    assert_eq!(s.trees.len() as u128, matrix_tree_count(&s.sg));
    let mut sorted = s.trees.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), s.trees.len());
    assert!(s
        .trees
        .iter()
        .all(|t| t.count_ones() as usize == s.sg.vertex_count() - 1));
}

#[test]
fn solver_reproduces_the_sampler() {
    let s = setup();
    let sampler = sampler_distribution(&s.g, &s.sg, &s.trees).unwrap();
    assert_eq!(s.solved.face_size, 128);
    assert!(compare_distributions(&s.solved.distribution, &sampler).unwrap() <= 1e-4);
    assert!(s.solved.residual <= 1e-8);
    assert!(sampler.marginal_residual(&s.sg) <= 1e-12);
    let (hs, ha) = (s.solved.distribution.entropy(), sampler.entropy());
    assert!(hs >= ha - 1e-6);
    assert!((hs - ha).abs() <= 1e-6);
    assert!((ha - 7.0 * 2f64.ln()).abs() < 1e-12);
    for (&t, &p) in s.trees.iter().zip(&s.solved.distribution.probabilities) {
        let q = sampler.probabilities[s.trees.iter().position(|&u| u == t).unwrap()];
        assert!((p - q).abs() < 1e-9);
    }
}

#[test]
fn perturbed_starts_agree() {
    let s = setup();
    let free = (0..s.sg.edge_count()).filter(|&e| s.sg.target(e) == 0.5).count();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let start: Vec<f64> = (0..free).map(|_| rng.random_range(-2.0..2.0)).collect();
        let opts = SolverOptions {
            start: Some(start),
            ..SolverOptions::default()
        };
        let other = solve_max_entropy(&s.sg, &s.trees, &opts).unwrap();
        assert!(other.residual <= 1e-8);
        assert!(compare_distributions(&s.solved.distribution, &other.distribution).unwrap() <= 1e-6);
    }
}

#[test]
fn budget_exhaustion_is_reported() {
    let s = setup();
    let opts = SolverOptions {
        max_iterations: 0,
        ..SolverOptions::default()
    };
    assert!(matches!(
        solve_max_entropy(&s.sg, &s.trees, &opts),
        Err(Error::NonConvergence { iterations: 0, .. })
    ));
}

#[test]
fn tight_blocks_factorize() {
    let s = setup();
    for b in blocks(&s.g) {
        assert!(s.sg.is_tight(&b));
        assert!(check_tight_set_factorization(&s.solved.distribution, &s.sg, &b).unwrap());
    }
    let everything: Vec<usize> = (0..s.g.vertex_count()).collect();
    assert!(check_tight_set_factorization(&s.solved.distribution, &s.sg, &everything).unwrap());
}

#[test]
fn correlated_distribution_does_not_factorize() {
    let s = setup();
    let b = &blocks(&s.g)[0];
    let inside = s.sg.inside(b);
    let p = &s.solved.distribution;
    let support: Vec<usize> = (0..s.trees.len()).filter(|&i| p.probabilities[i] > 1e-9).collect();
    let first = support[0];
    let t0 = s.trees[first];
    let second = *support
        .iter()
        .find(|&&i| s.trees[i] & inside != t0 & inside && s.trees[i] & !inside != t0 & !inside)
        .unwrap();
    let mut probabilities = p.probabilities.clone();
    probabilities[first] += 1e-3;
    probabilities[second] -= 1e-3;
    let skewed = TreeDistribution::new(s.trees.clone(), probabilities, s.sg.edge_count()).unwrap();
    assert!(!check_tight_set_factorization(&skewed, &s.sg, b).unwrap());
}

#[test]
fn non_tight_set_is_rejected() {
    let s = setup();
    let pair = [s.g.outer(0), s.g.outer(1)];
    assert!(!s.sg.is_tight(&pair));
    assert!(check_tight_set_factorization(&s.solved.distribution, &s.sg, &pair).is_err());
}

#[test]
fn certify_report() {
    let r = certify(&build_kdonut(3).unwrap()).unwrap();
    assert_eq!(r.tree_count as u128, r.matrix_tree_count);
    assert_eq!(r.sampler_tree_count, 128);
    // more trees hold every x_e = 1 edge than the face admits: the tight
    // blocks cut the count down to 128
    assert!(r.one_edge_tree_count > r.face_tree_count);
    assert_eq!(r.factorization_checks.len(), 3);
    assert!(r.factorization_checks.iter().all(|c| c.pass));
}
