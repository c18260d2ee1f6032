//! Independent check that the 1-tree sampler draws from the maximum-entropy
//! distribution: enumerate every spanning tree of the LP support (without
//! `{w0,w1}`), solve the entropy program numerically, and compare.
//!
//! Trees are bitmasks over the support graph's edges.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, KDonut, VertexId};
use crate::lp::SubtourSolution;
use crate::sampler::{enumerate_one_trees, Dsu};

/// Tree enumeration on the k-donut support is limited to this k.
pub const MAX_ORACLE_K: usize = 3;

/// Bitmask of support-graph edges.
pub type TreeMask = u64;

/// An edge-weighted graph carrying target marginals in half-units.
#[derive(Clone, Debug)]
pub struct SupportGraph {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
    halves: Vec<u8>,
    /// k-donut edge behind each support edge, when built from one.
    origin: Vec<Option<EdgeId>>,
}

impl SupportGraph {
    /// Support of `x` in the k-donut, minus `{w0,w1}`.
    pub fn for_kdonut(g: &KDonut, x: &SubtourSolution) -> Result<Self> {
        if g.k() > MAX_ORACLE_K {
            return Err(Error::BudgetExceeded {
                what: "spanning-tree enumeration",
                k: g.k(),
                max: MAX_ORACLE_K,
            });
        }
        let mut sg = SupportGraph {
            n: g.vertex_count(),
            edges: Vec::new(),
            halves: Vec::new(),
            origin: Vec::new(),
        };
        for (i, e) in g.edges().iter().enumerate() {
            let id = EdgeId(i);
            if id == g.e_plus() || x.halves(id) == 0 {
                continue;
            }
            sg.edges.push((e.a, e.b));
            sg.halves.push(x.halves(id));
            sg.origin.push(Some(id));
        }
        Ok(sg)
    }

    /// `edges[i] = (a, b, 2 * x_e)`.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId, u8)]) -> Result<Self> {
        if edges.len() > 64 {
            return Err(Error::InvalidInput("at most 64 edges fit a tree mask".into()));
        }
        Ok(SupportGraph {
            n,
            edges: edges.iter().map(|&(a, b, _)| (a, b)).collect(),
            halves: edges.iter().map(|&(_, _, h)| h).collect(),
            origin: vec![None; edges.len()],
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn target(&self, e: usize) -> f64 {
        f64::from(self.halves[e]) / 2.0
    }

    /// Support index of a k-donut edge.
    pub fn index_of(&self, id: EdgeId) -> Option<usize> {
        self.origin.iter().position(|&o| o == Some(id))
    }

    /// Mask of the edges with both ends in `s`.
    pub fn inside(&self, s: &[VertexId]) -> TreeMask {
        let mut member = vec![false; self.n];
        s.iter().for_each(|&v| member[v] = true);
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| member[a] && member[b])
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    fn halves_of(&self, mask: TreeMask) -> u32 {
        (0..self.edges.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| u32::from(self.halves[i]))
            .sum()
    }

    /// `x(E(S)) = |S| - 1`.
    pub fn is_tight(&self, s: &[VertexId]) -> bool {
        !s.is_empty() && self.halves_of(self.inside(s)) == 2 * (s.len() as u32 - 1)
    }

    fn spans(&self, mask: TreeMask) -> bool {
        let mut dsu = Dsu::new(self.n);
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                dsu.union(a, b);
            }
        }
        dsu.components() == 1
    }
}

/// Every spanning tree exactly once, by branching on each edge in order:
/// contract it (when it joins two components) or delete it (when the rest
/// still spans).
pub fn enumerate_spanning_trees(sg: &SupportGraph) -> Vec<TreeMask> {
    let mut out = Vec::new();
    if sg.n == 0 || !sg.spans(all_edges(sg)) {
        return out;
    }
    let mut parent: Vec<usize> = (0..sg.n).collect();
    branch(sg, 0, &mut parent, 0, 0, &mut out);
    out
}

fn all_edges(sg: &SupportGraph) -> TreeMask {
    if sg.edges.len() == 64 {
        u64::MAX
    } else {
        (1u64 << sg.edges.len()) - 1
    }
}

fn root(parent: &[usize], mut v: usize) -> usize {
    while parent[v] != v {
        v = parent[v];
    }
    v
}

fn branch(
    sg: &SupportGraph,
    i: usize,
    parent: &mut Vec<usize>,
    chosen: TreeMask,
    count: usize,
    out: &mut Vec<TreeMask>,
) {
    if count + 1 == sg.n {
        out.push(chosen);
        return;
    }
    if i == sg.edges.len() {
        return;
    }
    let (a, b) = sg.edges[i];
    let (ra, rb) = (root(parent, a), root(parent, b));
    if ra != rb {
        let mut contracted = parent.clone();
        contracted[ra] = rb;
        branch(sg, i + 1, &mut contracted, chosen | 1 << i, count + 1, out);
    }
    let rest = all_edges(sg) & !((1u64 << (i + 1)) - 1);
    if sg.spans(chosen | rest) {
        branch(sg, i + 1, parent, chosen, count, out);
    }
}

/// Number of spanning trees as the determinant of a Laplacian minor
/// (Bareiss elimination, exact).
pub fn matrix_tree_count(sg: &SupportGraph) -> u128 {
    if sg.n <= 1 {
        return 1;
    }
    let n = sg.n - 1;
    let mut lap = vec![vec![0i128; n]; n];
    for &(a, b) in &sg.edges {
        if a == b {
            continue;
        }
        if a < n {
            lap[a][a] += 1;
        }
        if b < n {
            lap[b][b] += 1;
        }
        if a < n && b < n {
            lap[a][b] -= 1;
            lap[b][a] -= 1;
        }
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for c in 0..n {
        if lap[c][c] == 0 {
            match (c + 1..n).find(|&r| lap[r][c] != 0) {
                Some(r) => {
                    lap.swap(c, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for r in c + 1..n {
            for j in c + 1..n {
                lap[r][j] = (lap[r][j] * lap[c][c] - lap[r][c] * lap[c][j]) / prev;
            }
            lap[r][c] = 0;
        }
        prev = lap[c][c];
    }
    (sign * lap[n - 1][n - 1]) as u128
}

/// A distribution over a fixed list of spanning trees.
#[derive(Clone, Debug)]
pub struct TreeDistribution {
    pub trees: Vec<TreeMask>,
    pub probabilities: Vec<f64>,
    edge_count: usize,
}

impl TreeDistribution {
    pub fn new(trees: Vec<TreeMask>, probabilities: Vec<f64>, edge_count: usize) -> Result<Self> {
        if trees.len() != probabilities.len() {
            return Err(Error::InvalidInput("one probability per tree".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        Ok(TreeDistribution {
            trees,
            probabilities,
            edge_count,
        })
    }

    /// `marginal(e) = Σ_{T ∋ e} p_T`.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.edge_count];
        for (&t, &p) in self.trees.iter().zip(&self.probabilities) {
            for (e, m) in out.iter_mut().enumerate() {
                if t >> e & 1 == 1 {
                    *m += p;
                }
            }
        }
        out
    }

    /// Natural-log entropy.
    pub fn entropy(&self) -> f64 {
        -self
            .probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Largest `|marginal(e) - x_e|`.
    pub fn marginal_residual(&self, sg: &SupportGraph) -> f64 {
        self.marginals()
            .iter()
            .enumerate()
            .map(|(e, m)| (m - sg.target(e)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Starting multipliers, one per fractional edge (zeros if `None`).
    pub start: Option<Vec<f64>>,
    pub tolerance: f64,
    pub objective_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            start: None,
            tolerance: 1e-8,
            objective_tolerance: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MaxEntropySolution {
    pub distribution: TreeDistribution,
    pub iterations: usize,
    pub residual: f64,
    /// Trees left after restricting to the minimal face containing `x`.
    pub face_size: usize,
}

/// Tight sets `S` (`x(E(S)) = |S| - 1`, `|S| >= 2`) as `(E(S) mask, |S| - 1)`.
fn tight_sets(sg: &SupportGraph) -> Result<Vec<(TreeMask, u32)>> {
    if sg.n > 20 {
        return Err(Error::InvalidInput(format!(
            "tight-set enumeration over {} vertices is out of budget",
            sg.n
        )));
    }
    let mut out = Vec::new();
    for subset in 1u32..(1 << sg.n) {
        let size = subset.count_ones();
        if size < 2 {
            continue;
        }
        let mask = sg
            .edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| subset >> a & 1 == 1 && subset >> b & 1 == 1)
            .fold(0u64, |m, (i, _)| m | 1 << i);
        if sg.halves_of(mask) == 2 * (size - 1) {
            out.push((mask, size - 1));
        }
    }
    Ok(out)
}

/// Maximum-entropy distribution over `trees` with marginals `x`.
///
/// The trees are first restricted to the minimal face of the spanning-tree
/// polytope containing `x` (edges with `x_e = 0` excluded, `x_e = 1`
/// required, `|T ∩ E(S)| = |S| - 1` on every tight set). On that face the
/// optimum has the form `p_T ∝ exp(λ · 1_T)` with finite multipliers on the
/// fractional edges, which damped Newton steps on the concave dual find.
pub fn solve_max_entropy(sg: &SupportGraph, trees: &[TreeMask], options: &SolverOptions) -> Result<MaxEntropySolution> {
    let m = sg.edge_count();
    let required: TreeMask = (0..m).filter(|&e| sg.halves[e] == 2).fold(0, |acc, e| acc | 1 << e);
    let forbidden: TreeMask = (0..m).filter(|&e| sg.halves[e] == 0).fold(0, |acc, e| acc | 1 << e);
    let tight = tight_sets(sg)?;
    let face: Vec<usize> = (0..trees.len())
        .filter(|&i| {
            let t = trees[i];
            t & required == required
                && t & forbidden == 0
                && tight.iter().all(|&(mask, need)| (t & mask).count_ones() == need)
        })
        .collect();
    if face.is_empty() {
        return Err(Error::InvalidInput(
            "x is not in the convex hull of the given trees".into(),
        ));
    }

    let free: Vec<usize> = (0..m).filter(|&e| sg.halves[e] == 1).collect();
    let d = free.len();
    let features: Vec<Vec<f64>> = face
        .iter()
        .map(|&i| free.iter().map(|&e| (trees[i] >> e & 1) as f64).collect())
        .collect();
    let target = DVector::from_iterator(d, free.iter().map(|&e| sg.target(e)));
    let mut lambda = match &options.start {
        Some(s) if s.len() == d => DVector::from_column_slice(s),
        Some(s) => {
            return Err(Error::InvalidInput(format!(
                "start point has {} entries, expected {d}",
                s.len()
            )))
        }
        None => DVector::zeros(d),
    };

    // (dual objective, face probabilities)
    let evaluate = |lambda: &DVector<f64>| -> (f64, Vec<f64>) {
        let scores: Vec<f64> = features
            .iter()
            .map(|f| f.iter().zip(lambda.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        let objective = top + z.ln() - lambda.dot(&target);
        (objective, weights.into_iter().map(|w| w / z).collect())
    };

    let (mut objective, mut probs) = evaluate(&lambda);
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    let mut residual;
    loop {
        let mut mean = DVector::zeros(d);
        for (f, &p) in features.iter().zip(&probs) {
            for j in 0..d {
                mean[j] += p * f[j];
            }
        }
        let grad = &mean - &target;
        residual = grad.amax();
        if residual <= options.tolerance && (previous - objective).abs() <= options.objective_tolerance {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(Error::NonConvergence { iterations, residual });
        }
        iterations += 1;

        let mut hessian = DMatrix::from_diagonal_element(d, d, 1e-10);
        for (f, &p) in features.iter().zip(&probs) {
            for r in 0..d {
                let dr = f[r] - mean[r];
                for c in 0..d {
                    hessian[(r, c)] += p * dr * (f[c] - mean[c]);
                }
            }
        }
        let direction = match hessian.cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -grad.clone(),
        };
        let slope = grad.dot(&direction);
        let mut step = 1.0;
        let (mut next_obj, mut next_probs);
        loop {
            let candidate = &lambda + &direction * step;
            (next_obj, next_probs) = evaluate(&candidate);
            if next_obj <= objective + 1e-4 * step * slope || step < 1e-12 {
                lambda = candidate;
                break;
            }
            step *= 0.5;
        }
        previous = objective;
        objective = next_obj;
        probs = next_probs;
    }

    let mut full = vec![0.0; trees.len()];
    for (&i, &p) in face.iter().zip(&probs) {
        full[i] = p;
    }
    let distribution = TreeDistribution::new(trees.to_vec(), full, m)?;
    let residual = distribution.marginal_residual(sg);
    Ok(MaxEntropySolution {
        distribution,
        iterations,
        residual,
        face_size: face.len(),
    })
}

/// Total-variation distance over a shared tree list.
pub fn compare_distributions(p: &TreeDistribution, q: &TreeDistribution) -> Result<f64> {
    if p.trees != q.trees {
        return Err(Error::InvalidInput(
            "distributions are over different tree lists".into(),
        ));
    }
    Ok(0.5
        * p.probabilities
            .iter()
            .zip(&q.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Whether `p` is the product of its restriction to `E(S)` and its
/// projection onto the contraction `G/S`, atom by atom within `1e-6`, and
/// every tree in its support has exactly `|S| - 1` edges inside `S`.
pub fn check_tight_set_factorization(p: &TreeDistribution, sg: &SupportGraph, s: &[VertexId]) -> Result<bool> {
    if !sg.is_tight(s) {
        return Err(Error::InvalidInput("set is not tight: x(E(S)) != |S| - 1".into()));
    }
    let inside = sg.inside(s);
    let need = s.len() as u32 - 1;
    let mut joint: HashMap<TreeMask, f64> = HashMap::new();
    let mut left: HashMap<TreeMask, f64> = HashMap::new();
    let mut right: HashMap<TreeMask, f64> = HashMap::new();
    for (&t, &pt) in p.trees.iter().zip(&p.probabilities) {
        if pt <= 0.0 {
            continue;
        }
        if (t & inside).count_ones() != need {
            return Ok(false);
        }
        *joint.entry(t).or_default() += pt;
        *left.entry(t & inside).or_default() += pt;
        *right.entry(t & !inside).or_default() += pt;
    }
    for (&a, &pa) in &left {
        for (&b, &pb) in &right {
            let pab = joint.get(&(a | b)).copied().unwrap_or(0.0);
            if (pab - pa * pb).abs() > 1e-6 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The sampler's distribution (uniform over its `2^{2k+1}` 1-trees, minus
/// `{w0,w1}`) laid over `trees`.
pub fn sampler_distribution(g: &KDonut, sg: &SupportGraph, trees: &[TreeMask]) -> Result<TreeDistribution> {
    let position: HashMap<TreeMask, usize> = trees.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let one_trees = enumerate_one_trees(g)?;
    let weight = 1.0 / one_trees.len() as f64;
    let mut probabilities = vec![0.0; trees.len()];
    for t in one_trees {
        let mut mask = 0u64;
        for &e in t.edges() {
            if e == g.e_plus() {
                continue;
            }
            let i = sg.index_of(e).ok_or_else(|| {
                Error::structure(
                    "max-entropy",
                    format!("sampled edge {} is outside the LP support", g.edge_label(e)),
                )
                .with_choice(&t.choice().to_string())
            })?;
            mask |= 1 << i;
        }
        let i = *position.get(&mask).ok_or_else(|| {
            Error::structure("max-entropy", "sampled tree is not a spanning tree of the support")
                .with_choice(&t.choice().to_string())
        })?;
        probabilities[i] += weight;
    }
    TreeDistribution::new(trees.to_vec(), probabilities, sg.edge_count())
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationCheck {
    pub set: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub k: usize,
    pub tree_count: usize,
    pub matrix_tree_count: u128,
    /// Trees holding every `x_e = 1` edge.
    pub one_edge_tree_count: usize,
    pub face_tree_count: usize,
    pub sampler_tree_count: usize,
    pub tv_distance: f64,
    pub entropy_solver: f64,
    pub entropy_sampler: f64,
    pub entropy_gap: f64,
    pub marginal_residual: f64,
    pub iterations: usize,
    /// TV distance to a second solve started away from zero.
    pub perturbed_start_tv: f64,
    pub factorization_checks: Vec<FactorizationCheck>,
}

/// Runs the whole comparison on the k-donut extreme point.
pub fn certify(g: &KDonut) -> Result<OracleReport> {
    let x = crate::lp::extreme_point(g);
    let sg = SupportGraph::for_kdonut(g, &x)?;
    let trees = enumerate_spanning_trees(&sg);
    let solved = solve_max_entropy(&sg, &trees, &SolverOptions::default())?;
    let sampler = sampler_distribution(g, &sg, &trees)?;
    let free = (0..sg.edge_count()).filter(|&e| sg.halves[e] == 1).count();
    let perturbed = solve_max_entropy(
        &sg,
        &trees,
        &SolverOptions {
            start: Some((0..free).map(|j| (j as f64 + 1.0).sin()).collect()),
            ..SolverOptions::default()
        },
    )?;
    let required: TreeMask = (0..sg.edge_count())
        .filter(|&e| sg.halves[e] == 2)
        .fold(0, |acc, e| acc | 1 << e);
    let mut factorization_checks = Vec::new();
    for i in (1..g.ring_len()).step_by(2) {
        let s = [g.outer(i), g.inner(i), g.outer(i + 1), g.inner(i + 1)];
        factorization_checks.push(FactorizationCheck {
            set: s.iter().map(|&v| g.label(v)).collect(),
            pass: check_tight_set_factorization(&solved.distribution, &sg, &s)?,
        });
    }
    let (h_solver, h_sampler) = (solved.distribution.entropy(), sampler.entropy());
    Ok(OracleReport {
        k: g.k(),
        tree_count: trees.len(),
        matrix_tree_count: matrix_tree_count(&sg),
        one_edge_tree_count: trees.iter().filter(|&&t| t & required == required).count(),
        face_tree_count: solved.face_size,
        sampler_tree_count: sampler.probabilities.iter().filter(|&&p| p > 0.0).count(),
        tv_distance: compare_distributions(&solved.distribution, &sampler)?,
        entropy_solver: h_solver,
        entropy_sampler: h_sampler,
        entropy_gap: (h_solver - h_sampler).abs(),
        marginal_residual: solved.residual,
        iterations: solved.iterations,
        perturbed_start_tv: compare_distributions(&solved.distribution, &perturbed.distribution)?,
        factorization_checks,
    })
}
