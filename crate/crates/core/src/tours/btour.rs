//! Adversarial ("B") Euler tours whose shortcuts lose almost nothing.
//!
//! Orientation: clockwise is the direction of increasing ring index. On the
//! `M1` ring the circuit at slot `j + 1` is clockwise of the one at slot `j`.

use super::circuits::{classify_circuits, CircuitDecomposition, CircuitRole};
use super::{EulerianSubgraph, Tour};
use crate::error::{Error, Result};
use crate::graph::{KDonut, Ring, VertexId};
use crate::matching::MatchingKind;

fn deadlock(detail: impl Into<String>) -> Error {
    Error::structure("b-tour", detail)
}

fn require_kind(a: &EulerianSubgraph, kind: MatchingKind) -> Result<()> {
    if a.matching_kind() == Some(kind) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "B-tour for {kind:?} called on a {:?} subgraph",
            a.matching_kind()
        )))
    }
}

/// B-tour on `T ⊎ M1`.
///
/// Starts at the special circuit's degree-4 vertex on the counterclockwise
/// side of `w0`. At a degree-4 vertex reached for the first time the tour
/// always continues into the clockwise circuit `C`: straight across a doubled
/// edge, otherwise onto the ring opposite to the one it used last inside a
/// circuit of length 5 or 8. At `t_0` it takes the lowest-numbered neighbour
/// in `C`.
pub fn b_tour_m1(a: &EulerianSubgraph, g: &KDonut) -> Result<Tour> {
    require_kind(a, MatchingKind::M1)?;
    let dec = classify_circuits(a, g)?;
    b_tour_m1_on(a, g, &dec)
}

pub(crate) fn b_tour_m1_on(a: &EulerianSubgraph, g: &KDonut, dec: &CircuitDecomposition) -> Result<Tour> {
    let slots = dec.circuits.len();
    let owner = dec.edge_owner(a.edge_count());

    // clockwise circuit of every shared vertex
    let mut clockwise = vec![usize::MAX; a.vertex_count()];
    for j in 0..slots {
        let next = (j + 1) % slots;
        for &v in &dec.circuits[j].anchors {
            if dec.circuits[next].anchors.contains(&v) {
                clockwise[v] = next;
            }
        }
    }
    let t0 = (0..a.vertex_count())
        .find(|&v| clockwise[v] == 0)
        .ok_or_else(|| deadlock("special circuit has no counterclockwise anchor"))?;

    let long = |e: usize| {
        let c = &dec.circuits[owner[e]];
        c.role == CircuitRole::Regular && matches!(c.len(), 5 | 8)
    };

    let mut used = vec![false; a.edge_count()];
    let mut vertices = vec![t0];
    let mut edges = Vec::with_capacity(a.edge_count());
    let mut last_ring = g.ring_of(t0);
    let mut cur = t0;
    while edges.len() < a.edge_count() {
        let open: Vec<(VertexId, usize)> = a.neighbors(cur).iter().copied().filter(|&(_, e)| !used[e]).collect();
        let (next, e) = if cur == t0 {
            open.iter()
                .copied()
                .filter(|&(_, e)| owner[e] == 0)
                .min()
                .ok_or_else(|| deadlock("no untraversed special-circuit edge at t0"))?
        } else if open.len() == 1 {
            open[0]
        } else if open.len() == 3 {
            let c = clockwise[cur];
            let ahead: Vec<(VertexId, usize)> = open.iter().copied().filter(|&(_, e)| owner[e] == c).collect();
            if ahead.len() != 2 {
                return Err(deadlock(format!(
                    "{} untraversed clockwise edges at {}",
                    ahead.len(),
                    g.label(cur)
                )));
            }
            if dec.circuits[c].len() == 2 {
                ahead[0].min(ahead[1])
            } else {
                let want = match last_ring {
                    Some(Ring::Outer) => Ring::Inner,
                    _ => Ring::Outer,
                };
                let pick: Vec<_> = ahead
                    .iter()
                    .copied()
                    .filter(|&(w, _)| g.ring_of(w) == Some(want))
                    .collect();
                if pick.len() != 1 {
                    return Err(deadlock(format!(
                        "{} clockwise edges at {} lead to the {want:?} ring",
                        pick.len(),
                        g.label(cur)
                    )));
                }
                pick[0]
            }
        } else {
            return Err(deadlock(format!(
                "{} untraversed edges at {}",
                open.len(),
                g.label(cur)
            )));
        };
        if long(e) {
            if let Some(r) = g.ring_of(cur) {
                last_ring = Some(r);
            }
        }
        used[e] = true;
        edges.push(e);
        vertices.push(next);
        cur = next;
    }
    if cur != t0 {
        return Err(deadlock("tour did not return to t0"));
    }
    let tour = Tour::new(a, vertices, edges);
    tour.check(a)?;
    Ok(tour)
}

/// B-tour on `T ⊎ M2`.
///
/// Starts at the lowest-index outer-ring degree-2 vertex of the large cycle
/// (inner ring, then `w0`, if there is none), steps clockwise, and on first
/// reaching a degree-4 vertex takes its matching edge into the hanging
/// circuit.
pub fn b_tour_m2(a: &EulerianSubgraph, g: &KDonut) -> Result<Tour> {
    require_kind(a, MatchingKind::M2)?;
    let dec = classify_circuits(a, g)?;
    b_tour_m2_on(a, g, &dec)
}

pub(crate) fn b_tour_m2_on(a: &EulerianSubgraph, g: &KDonut, dec: &CircuitDecomposition) -> Result<Tour> {
    let spine = &dec.circuits[0];
    let len = spine.vertices.len();
    let pos = |v: VertexId| spine.vertices.iter().position(|&x| x == v);
    let (p0, p1) = match (pos(g.w0()), pos(g.w1())) {
        (Some(p0), Some(p1)) => (p0, p1),
        _ => return Err(deadlock("w0 or w1 is off the large cycle")),
    };
    // clockwise runs w0 -> w1
    let forward = (p0 + 1) % len == p1;

    let start_key = |v: VertexId| match g.vertex(v) {
        crate::graph::Vertex::Outer(i) => (0, i),
        crate::graph::Vertex::Inner(i) => (1, i),
        crate::graph::Vertex::W0 => (2, 0),
        crate::graph::Vertex::W1 => (3, 0),
    };
    let (start_pos, t0) = spine
        .vertices
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| a.degree(v) == 2)
        .min_by_key(|&(_, v)| start_key(v))
        .ok_or_else(|| deadlock("large cycle has no degree-2 vertex"))?;
    let first_edge = if forward {
        spine.edges[start_pos]
    } else {
        spine.edges[(start_pos + len - 1) % len]
    };

    let mut used = vec![false; a.edge_count()];
    let mut vertices = vec![t0];
    let mut edges = Vec::with_capacity(a.edge_count());
    let mut step = |e: usize, from: VertexId, used: &mut Vec<bool>| -> VertexId {
        used[e] = true;
        edges.push(e);
        let next = a.edge(e).other(from);
        vertices.push(next);
        next
    };
    let mut cur = step(first_edge, t0, &mut used);
    while cur != t0 || used.iter().any(|&u| !u) {
        let open: Vec<(VertexId, usize)> = a.neighbors(cur).iter().copied().filter(|&(_, e)| !used[e]).collect();
        let e = match open.len() {
            1 => open[0].1,
            3 => {
                let m: Vec<usize> = open
                    .iter()
                    .map(|&(_, e)| e)
                    .filter(|&e| a.edge(e).is_matching())
                    .collect();
                if m.len() != 1 {
                    return Err(deadlock(format!(
                        "{} untraversed matching edges at {}",
                        m.len(),
                        g.label(cur)
                    )));
                }
                m[0]
            }
            n => {
                return Err(deadlock(format!("{n} untraversed edges at {}", g.label(cur))));
            }
        };
        cur = step(e, cur, &mut used);
    }
    let tour = Tour::new(a, vertices, edges);
    tour.check(a)?;
    Ok(tour)
}
