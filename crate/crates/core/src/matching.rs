//! Odd vertices of a 1-tree, the two structural matchings `M1` / `M2`, and a
//! brute-force minimum-cost perfect matching used as an independent oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{KDonut, Metric, VertexId};
use crate::sampler::OneTree;

/// Largest number of vertices [`oracle_min_matching`] accepts.
pub const MAX_ORACLE_VERTICES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingKind {
    M1,
    M2,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerfectMatching {
    pub pairs: Vec<(VertexId, VertexId)>,
    pub cost: u64,
    pub kind: MatchingKind,
}

impl PerfectMatching {
    fn from_pairs(pairs: Vec<(VertexId, VertexId)>, m: &Metric, kind: MatchingKind) -> Self {
        let cost = pairs.iter().map(|&(a, b)| u64::from(m.dist(a, b))).sum();
        PerfectMatching { pairs, cost, kind }
    }
}

/// `o_0, ..., o_{2k-1}`: the odd vertex of each pair `(u_i, v_i)`.
pub fn odd_vertices(t: &OneTree, g: &KDonut) -> Result<Vec<VertexId>> {
    let choice = t.choice().to_string();
    if t.degree(g.w0()) % 2 == 1 || t.degree(g.w1()) % 2 == 1 {
        return Err(Error::structure("claim1", "w0 or w1 has odd degree").with_choice(&choice));
    }
    (0..g.ring_len())
        .map(|i| {
            let (u, v) = (g.outer(i), g.inner(i));
            match (t.degree(u) % 2 == 1, t.degree(v) % 2 == 1) {
                (true, false) => Ok(u),
                (false, true) => Ok(v),
                _ => Err(
                    Error::structure("claim1", format!("pair {i} does not have exactly one odd vertex"))
                        .with_choice(&choice),
                ),
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct StructuralMatchings {
    pub m1: PerfectMatching,
    pub m2: PerfectMatching,
}

impl StructuralMatchings {
    /// The cheaper of the two; `M1` on ties.
    pub fn best(&self) -> &PerfectMatching {
        if self.m2.cost < self.m1.cost {
            &self.m2
        } else {
            &self.m1
        }
    }

    pub fn min_cost(&self) -> u64 {
        self.best().cost
    }
}

/// `M1 = {(o_0,o_1), (o_2,o_3), ...}` and
/// `M2 = {(o_{2k-1},o_0), (o_1,o_2), ...}`, costed from the metric table.
pub fn structural_matchings(odds: &[VertexId], m: &Metric) -> Result<StructuralMatchings> {
    let len = odds.len();
    if len < 2 || len % 2 == 1 {
        return Err(Error::InvalidInput(format!(
            "need an even number (>= 2) of odd vertices, got {len}"
        )));
    }
    let m1 = (0..len).step_by(2).map(|i| (odds[i], odds[i + 1])).collect();
    let mut m2: Vec<_> = vec![(odds[len - 1], odds[0])];
    m2.extend((1..len - 1).step_by(2).map(|i| (odds[i], odds[i + 1])));
    Ok(StructuralMatchings {
        m1: PerfectMatching::from_pairs(m1, m, MatchingKind::M1),
        m2: PerfectMatching::from_pairs(m2, m, MatchingKind::M2),
    })
}

/// Exact minimum-cost perfect matching over all pairs, by dynamic
/// programming over subsets: the lowest unmatched vertex is paired with
/// every candidate partner.
pub fn oracle_min_matching(odds: &[VertexId], m: &Metric) -> Result<PerfectMatching> {
    let n = odds.len();
    if n % 2 == 1 {
        return Err(Error::InvalidInput(format!("odd number of vertices ({n})")));
    }
    if n > MAX_ORACLE_VERTICES {
        return Err(Error::BudgetExceeded {
            what: "matching oracle",
            k: n / 2,
            max: MAX_ORACLE_VERTICES / 2,
        });
    }
    if n == 0 {
        return Ok(PerfectMatching {
            pairs: Vec::new(),
            cost: 0,
            kind: MatchingKind::Oracle,
        });
    }
    let full = (1usize << n) - 1;
    let mut best = vec![u32::MAX; 1 << n];
    // the pair added to reach this mask
    let mut last = vec![(0u8, 0u8); 1 << n];
    best[0] = 0;
    for mask in 0..full {
        let here = best[mask];
        if here == u32::MAX {
            continue;
        }
        let i = (!mask).trailing_zeros() as usize;
        for j in i + 1..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << i) | (1 << j);
            let cost = here + m.dist(odds[i], odds[j]);
            if cost < best[next] {
                best[next] = cost;
                last[next] = (i as u8, j as u8);
            }
        }
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let (i, j) = last[mask];
        pairs.push((odds[i as usize], odds[j as usize]));
        mask &= !((1 << i) | (1 << j));
    }
    pairs.reverse();
    Ok(PerfectMatching::from_pairs(pairs, m, MatchingKind::Oracle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_kdonut, shortest_path_metric};
    use crate::sampler::{one_tree_from_choices, ChoiceVector};

    #[test]
    fn single_adjacent_pair() {
        let g = build_kdonut(3).unwrap();
        let m = shortest_path_metric(&g);
        let pm = oracle_min_matching(&[g.outer(0), g.outer(1)], &m).unwrap();
        assert_eq!(pm.cost, 1);
        assert_eq!(pm.pairs, vec![(g.outer(0), g.outer(1))]);
    }

    #[test]
    fn same_ring_costs_k() {
        let g = build_kdonut(3).unwrap();
        let m = shortest_path_metric(&g);
        let odds: Vec<_> = (0..6).map(|i| g.outer(i)).collect();
        let s = structural_matchings(&odds, &m).unwrap();
        assert_eq!((s.m1.cost, s.m2.cost), (3, 3));
        assert_eq!(s.best().kind, MatchingKind::M1);
    }

    #[test]
    fn alternating_rings_cost_2k() {
        let g = build_kdonut(3).unwrap();
        let m = shortest_path_metric(&g);
        let odds: Vec<_> = (0..6)
            .map(|i| if i % 2 == 0 { g.outer(i) } else { g.inner(i) })
            .collect();
        let s = structural_matchings(&odds, &m).unwrap();
        assert_eq!((s.m1.cost, s.m2.cost), (6, 6));
    }

    #[test]
    fn all_zeros_tree_matchings() {
        // odd vertices v0 u1 v2 u3 v4 u5: every neighbouring pair crosses rings
        let g = build_kdonut(3).unwrap();
        let m = shortest_path_metric(&g);
        let t = one_tree_from_choices(&g, ChoiceVector::zeros(3)).unwrap();
        let odds = odd_vertices(&t, &g).unwrap();
        assert_eq!(
            odds,
            vec![g.inner(0), g.outer(1), g.inner(2), g.outer(3), g.inner(4), g.outer(5)]
        );
        let s = structural_matchings(&odds, &m).unwrap();
        assert_eq!((s.m1.cost, s.m2.cost), (6, 6));
        assert_eq!(s.m2.pairs[0], (g.outer(5), g.inner(0)));
        assert_eq!(oracle_min_matching(&odds, &m).unwrap().cost, 6);
    }

    #[test]
    fn oracle_rejects_large_or_odd_inputs() {
        let g = build_kdonut(13).unwrap();
        let m = shortest_path_metric(&g);
        let odds: Vec<_> = (0..26).map(|i| g.outer(i)).collect();
        assert!(oracle_min_matching(&odds, &m).is_err());
        assert!(oracle_min_matching(&odds[..3], &m).is_err());
    }
}
