//! The half-integral Subtour LP point on the k-donut, with exact
//! feasibility and extremality certificates.
//!
//! Values are kept in half-units: `2 * x_e` is stored, so `x_e` in
//! `{0, 1/2, 1}` becomes `{0, 1, 2}` and every check is integer arithmetic.

use std::collections::HashSet;

use serde::ser::{SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeKind, KDonut, VertexId};

/// Largest k for which [`check_extreme`] enumerates tight sets.
pub const MAX_EXTREME_K: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtourSolution {
    halves: Vec<u8>,
}

impl SubtourSolution {
    pub fn from_halves(g: &KDonut, halves: Vec<u8>) -> Result<Self> {
        if halves.len() != g.edge_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} edge values, got {}",
                g.edge_count(),
                halves.len()
            )));
        }
        Ok(SubtourSolution { halves })
    }

    /// Incidence vector of a closed tour given as a vertex cycle.
    pub fn from_tour(g: &KDonut, cycle: &[VertexId]) -> Result<Self> {
        let mut halves = vec![0u8; g.edge_count()];
        for i in 0..cycle.len() {
            let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            let e = g
                .edge_between(a, b)
                .ok_or_else(|| Error::InvalidInput(format!("{}-{} is not an edge", g.label(a), g.label(b))))?;
            halves[e.0] += 2;
        }
        Ok(SubtourSolution { halves })
    }

    /// `2 * x_e`.
    pub fn halves(&self, e: EdgeId) -> u8 {
        self.halves[e.0]
    }

    pub fn set_halves(&mut self, e: EdgeId, value: u8) {
        self.halves[e.0] = value;
    }

    pub fn value(&self, e: EdgeId) -> f64 {
        f64::from(self.halves[e.0]) / 2.0
    }

    pub fn all_halves(&self) -> &[u8] {
        &self.halves
    }

    /// `c(x)`; every k-donut edge has unit cost. Returned doubled so that it
    /// stays an integer for any half-integral point.
    pub fn objective_halves(&self) -> u64 {
        self.halves.iter().map(|&h| u64::from(h)).sum()
    }

    /// `c(x)` for points whose objective is integral (which includes the
    /// extreme point and every tour).
    pub fn objective(&self) -> Option<u64> {
        let h = self.objective_halves();
        h.is_multiple_of(2).then_some(h / 2)
    }

    pub fn fractional_edges(&self) -> Vec<EdgeId> {
        (0..self.halves.len())
            .filter(|&e| self.halves[e] == 1)
            .map(EdgeId)
            .collect()
    }

    pub fn to_json(&self, g: &KDonut) -> serde_json::Value {
        serde_json::to_value(LabeledSolution { g, x: self }).expect("plain map serializes")
    }
}

struct LabeledSolution<'a> {
    g: &'a KDonut,
    x: &'a SubtourSolution,
}

impl serde::Serialize for LabeledSolution<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.x.halves.len()))?;
        for (i, h) in self.x.halves.iter().enumerate() {
            map.serialize_entry(&self.g.edge_label(EdgeId(i)), h)?;
        }
        map.end()
    }
}

/// The half-integral extreme point: spokes 1/2, ring edges 1 at odd
/// positions and 1/2 at even positions other than 0, `{w0,w1}` = 1, the four
/// gadget attachments 1/2, everything else 0.
pub fn extreme_point(g: &KDonut) -> SubtourSolution {
    let halves = g
        .edges()
        .iter()
        .map(|e| match e.kind {
            EdgeKind::Spoke(_) => 1,
            EdgeKind::OuterRing(i) | EdgeKind::InnerRing(i) => match i {
                0 => 0,
                _ if i % 2 == 1 => 2,
                _ => 1,
            },
            EdgeKind::Plus => 2,
            EdgeKind::W0Outer | EdgeKind::W0Inner | EdgeKind::W1Outer | EdgeKind::W1Inner => 1,
        })
        .collect();
    SubtourSolution { halves }
}

/// Bounds, degree equalities, and every cut constraint (through one global
/// minimum cut of the support weighted by `2x`).
pub fn check_feasible(x: &SubtourSolution, g: &KDonut) -> bool {
    if x.halves.len() != g.edge_count() || x.halves.iter().any(|&h| h > 2) {
        return false;
    }
    let degrees_ok = (0..g.vertex_count()).all(|v| {
        let total: u32 = g.neighbors(v).iter().map(|&(_, e)| u32::from(x.halves(e))).sum();
        total == 4
    });
    if !degrees_ok {
        return false;
    }
    let weighted: Vec<(usize, usize, u64)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| x.halves[*i] > 0)
        .map(|(i, e)| (e.a, e.b, u64::from(x.halves[i])))
        .collect();
    global_min_cut(g.vertex_count(), &weighted) >= 4
}

/// Stoer–Wagner global minimum cut of an undirected weighted graph.
/// Disconnected graphs have cut value 0; graphs with fewer than two
/// vertices return `u64::MAX` (no proper cut exists).
pub fn global_min_cut(n: usize, edges: &[(usize, usize, u64)]) -> u64 {
    if n < 2 {
        return u64::MAX;
    }
    let mut w = vec![vec![0u64; n]; n];
    for &(a, b, c) in edges {
        if a != b {
            w[a][b] += c;
            w[b][a] += c;
        }
    }
    let mut alive: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    while alive.len() > 1 {
        let mut conn = vec![0u64; n];
        let mut added = vec![false; n];
        let mut prev = alive[0];
        let mut last = alive[0];
        for step in 0..alive.len() {
            let next = *alive
                .iter()
                .filter(|&&v| !added[v])
                .max_by(|&&a, &&b| conn[a].cmp(&conn[b]).then(b.cmp(&a)))
                .expect("an unadded vertex remains in every phase step");
            added[next] = true;
            if step == alive.len() - 1 {
                best = best.min(conn[next]);
            }
            prev = last;
            last = next;
            for &v in &alive {
                if !added[v] {
                    conn[v] += w[next][v];
                }
            }
        }
        // merge `last` into `prev`
        for &v in &alive {
            w[prev][v] += w[last][v];
            w[v][prev] = w[prev][v];
        }
        w[prev][prev] = 0;
        alive.retain(|&v| v != last);
    }
    best
}

/// Rank test on the tight constraints restricted to fractional edges.
///
/// Tight sets are found by enumerating every proper `S` containing vertex 0
/// (a Gray-code walk keeps `x(δ(S))` and the cut's fractional incidence up
/// to date with one vertex flip per step).
pub fn check_extreme(x: &SubtourSolution, g: &KDonut) -> Result<bool> {
    if g.k() > MAX_EXTREME_K {
        return Err(Error::BudgetExceeded {
            what: "extreme-point rank test",
            k: g.k(),
            max: MAX_EXTREME_K,
        });
    }
    let frac = x.fractional_edges();
    let cols = frac.len();
    if cols == 0 {
        return Ok(true);
    }
    let mut col_of = vec![usize::MAX; g.edge_count()];
    for (c, e) in frac.iter().enumerate() {
        col_of[e.0] = c;
    }
    let n = g.vertex_count();

    let mut rows: Vec<u64> = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    let incident_mask = |v: VertexId| -> u64 {
        g.neighbors(v)
            .iter()
            .filter(|(_, e)| col_of[e.0] != usize::MAX)
            .fold(0u64, |m, (_, e)| m | (1 << col_of[e.0]))
    };
    for v in 0..n {
        let row = incident_mask(v);
        if seen.insert(row) {
            rows.push(row);
        }
    }

    // S always contains vertex 0; bit j of the Gray code toggles vertex j + 1.
    let mut in_s = vec![false; n];
    in_s[0] = true;
    let mut size = 1usize;
    let mut cut_halves: i64 = g.neighbors(0).iter().map(|&(_, e)| i64::from(x.halves(e))).sum();
    let mut cut_mask = incident_mask(0);
    let masks: Vec<u64> = (0..n).map(incident_mask).collect();
    let steps: u64 = 1 << (n - 1);
    for step in 1..steps {
        let v = step.trailing_zeros() as usize + 1;
        for &(w, e) in g.neighbors(v) {
            let h = i64::from(x.halves(e));
            if in_s[w] == in_s[v] {
                cut_halves += h;
            } else {
                cut_halves -= h;
            }
        }
        cut_mask ^= masks[v];
        in_s[v] = !in_s[v];
        if in_s[v] {
            size += 1;
        } else {
            size -= 1;
        }
        if size >= 2 && size <= n - 2 && cut_halves == 4 && seen.insert(cut_mask) {
            rows.push(cut_mask);
        }
    }
    Ok(exact_rank(&rows, cols) == cols)
}

/// Rank over the rationals of 0/1 rows given as bitmasks, by fraction-free
/// elimination in `i128`.
pub(crate) fn exact_rank(rows: &[u64], cols: usize) -> usize {
    // basis[c] is a row whose leading column is c
    let mut basis: Vec<Option<Vec<i128>>> = vec![None; cols];
    let mut rank = 0;
    for &mask in rows {
        let mut r: Vec<i128> = (0..cols).map(|c| i128::from((mask >> c) & 1 == 1)).collect();
        for c in 0..cols {
            if r[c] == 0 {
                continue;
            }
            match &basis[c] {
                Some(b) => {
                    let (f, p) = (r[c], b[c]);
                    for j in 0..cols {
                        r[j] = r[j] * p - b[j] * f;
                    }
                    normalize(&mut r);
                }
                None => {
                    basis[c] = Some(r);
                    rank += 1;
                    break;
                }
            }
        }
        if rank == cols {
            break;
        }
    }
    rank
}

fn normalize(r: &mut [i128]) {
    let g = r.iter().fold(0i128, |acc, &v| gcd(acc, v.abs()));
    if g > 1 {
        r.iter_mut().for_each(|v| *v /= g);
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_kdonut;

    #[test]
    fn extreme_point_values() {
        let g = build_kdonut(3).unwrap();
        let x = extreme_point(&g);
        assert_eq!(x.objective(), Some(14));
        assert_eq!(x.halves(g.e_plus()), 2);
        assert_eq!(x.halves(g.outer_edge(0)), 0);
        assert_eq!(x.halves(g.inner_edge(0)), 0);
        assert_eq!(x.halves(g.outer_edge(1)), 2);
        assert_eq!(x.halves(g.inner_edge(2)), 1);
        assert_eq!(x.halves(g.spoke(4)), 1);
    }

    #[test]
    fn extreme_point_is_feasible_and_extreme() {
        let g = build_kdonut(3).unwrap();
        let x = extreme_point(&g);
        assert!(check_feasible(&x, &g));
        assert!(check_extreme(&x, &g).unwrap());
    }

    #[test]
    fn raised_spoke_is_infeasible() {
        let g = build_kdonut(3).unwrap();
        let mut x = extreme_point(&g);
        x.set_halves(g.spoke(2), 2);
        assert!(!check_feasible(&x, &g));
    }

    #[test]
    fn dropped_gadget_edges_are_infeasible() {
        let g = build_kdonut(3).unwrap();
        let mut x = extreme_point(&g);
        let a = g.edge_between(g.w0(), g.outer(0)).unwrap();
        let b = g.edge_between(g.w0(), g.inner(0)).unwrap();
        x.set_halves(a, 0);
        x.set_halves(b, 0);
        assert!(!check_feasible(&x, &g));
    }

    #[test]
    fn two_subtours_fail_only_the_cut_test() {
        // outer ring through w0, w1 plus the inner ring: all degrees 2, cut 0
        let g = build_kdonut(4).unwrap();
        let mut first: Vec<VertexId> = vec![g.w0(), g.w1()];
        first.extend((1..8).map(|i| g.outer(i)));
        first.push(g.outer(0));
        let mut x = SubtourSolution::from_tour(&g, &first).unwrap();
        let second: Vec<VertexId> = (0..8).map(|i| g.inner(i)).collect();
        let y = SubtourSolution::from_tour(&g, &second).unwrap();
        for e in 0..g.edge_count() {
            x.set_halves(EdgeId(e), x.halves(EdgeId(e)) + y.halves(EdgeId(e)));
        }
        assert!(!check_feasible(&x, &g));
    }

    #[test]
    fn tour_vector_is_extreme() {
        let g = build_kdonut(3).unwrap();
        let x = SubtourSolution::from_tour(&g, &g.hamiltonian_cycle()).unwrap();
        assert!(check_feasible(&x, &g));
        assert!(check_extreme(&x, &g).unwrap());
    }

    #[test]
    fn extreme_test_is_capped() {
        let g = build_kdonut(6).unwrap();
        let x = extreme_point(&g);
        assert!(matches!(check_extreme(&x, &g), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(exact_rank(&[0b011, 0b110, 0b101], 3), 3);
        // over GF(2) these would be dependent
        assert_eq!(exact_rank(&[0b011, 0b110, 0b101, 0b111], 3), 3);
        assert_eq!(exact_rank(&[0b011, 0b011, 0b000], 3), 1);
        assert_eq!(exact_rank(&[0b0011, 0b1100, 0b0101, 0b1010], 4), 3);
    }

    #[test]
    fn min_cut_small_graphs() {
        // two triangles joined by one edge of weight 1
        let edges = [
            (0, 1, 3),
            (1, 2, 3),
            (0, 2, 3),
            (3, 4, 3),
            (4, 5, 3),
            (3, 5, 3),
            (2, 3, 1),
        ];
        assert_eq!(global_min_cut(6, &edges), 1);
        assert_eq!(global_min_cut(4, &[(0, 1, 5), (2, 3, 5)]), 0);
        assert_eq!(global_min_cut(2, &[(0, 1, 1), (0, 1, 3)]), 4);
    }
}
