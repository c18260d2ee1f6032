//! Circuit structure of `T ⊎ M1` (a ring of circuits) and `T ⊎ M2` (one
//! large cycle with short circuits hanging off it).
//!
//! Both shapes are recovered generically: the degree-2 vertices split the
//! multigraph into segments running between degree-4 vertices; two segments
//! with the same endpoints form a ring circuit, and a segment that returns to
//! its start is a hanging circuit. Any deviation from the expected shape is
//! reported as a structure violation.

use std::collections::BTreeMap;

use super::{EdgeOrigin, EulerianSubgraph};
use crate::error::{Error, Result};
use crate::graph::{KDonut, VertexId};
use crate::matching::MatchingKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Circuits arranged in a circle, consecutive ones sharing one vertex.
    Ring,
    /// One large cycle plus circuits hanging off single vertices.
    Spine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitRole {
    /// The ring circuit through `{w0, w1}`.
    Special,
    Regular,
    /// The large cycle of the `M2` shape.
    Spine,
    Pendant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub role: CircuitRole,
    /// Edge indices into the subgraph, in walking order.
    pub edges: Vec<usize>,
    /// Vertices in walking order (the start is not repeated).
    pub vertices: Vec<VertexId>,
    /// Degree-4 vertices on this circuit.
    pub anchors: Vec<VertexId>,
}

impl Circuit {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct CircuitDecomposition {
    pub shape: Shape,
    /// `Ring`: index `j` is the circuit holding the pair `(o_{2j}, o_{2j+1})`,
    /// so index 0 is the special circuit and indices increase clockwise.
    /// `Spine`: the large cycle first, then hanging circuits by anchor.
    pub circuits: Vec<Circuit>,
}

impl CircuitDecomposition {
    /// `circuit_of[e]` for every subgraph edge.
    pub fn edge_owner(&self, edge_count: usize) -> Vec<usize> {
        let mut owner = vec![usize::MAX; edge_count];
        for (c, circuit) in self.circuits.iter().enumerate() {
            for &e in &circuit.edges {
                owner[e] = c;
            }
        }
        owner
    }
}

struct Segment {
    start: VertexId,
    end: VertexId,
    edges: Vec<usize>,
    /// From `start` to `end`, inclusive.
    vertices: Vec<VertexId>,
}

fn violation(detail: impl Into<String>) -> Error {
    Error::structure("circuits", detail)
}

/// Splits the subgraph into maximal trails whose interior vertices have
/// degree 2 and whose ends have degree 4.
fn segments(a: &EulerianSubgraph) -> Result<Vec<Segment>> {
    let n = a.vertex_count();
    if let Some(v) = (0..n).find(|&v| a.degree(v) != 2 && a.degree(v) != 4) {
        return Err(violation(format!("vertex {v} has degree {}", a.degree(v))));
    }
    let mut used = vec![false; a.edge_count()];
    let mut out = Vec::new();
    for d in (0..n).filter(|&v| a.degree(v) == 4) {
        for &(_, first) in a.neighbors(d) {
            if used[first] {
                continue;
            }
            let mut seg = Segment {
                start: d,
                end: d,
                edges: Vec::new(),
                vertices: vec![d],
            };
            let (mut cur, mut e) = (d, first);
            loop {
                used[e] = true;
                seg.edges.push(e);
                cur = a.edge(e).other(cur);
                seg.vertices.push(cur);
                if a.degree(cur) == 4 {
                    break;
                }
                e = a
                    .neighbors(cur)
                    .iter()
                    .map(|&(_, f)| f)
                    .find(|&f| !used[f])
                    .ok_or_else(|| violation("trail ran into a used edge"))?;
            }
            seg.end = cur;
            out.push(seg);
        }
    }
    if used.iter().any(|&u| !u) {
        return Err(violation("a cycle without degree-4 vertices is detached from the rest"));
    }
    Ok(out)
}

/// Recovers the circuit structure of an `M1` or `M2` subgraph and checks it
/// against the expected shape.
pub fn classify_circuits(a: &EulerianSubgraph, g: &KDonut) -> Result<CircuitDecomposition> {
    match a.matching_kind() {
        Some(MatchingKind::M1) => ring(a, g),
        Some(MatchingKind::M2) => spine(a, g),
        other => Err(Error::InvalidInput(format!(
            "circuit classification needs an M1 or M2 subgraph, got {other:?}"
        ))),
    }
}

fn ring(a: &EulerianSubgraph, g: &KDonut) -> Result<CircuitDecomposition> {
    let k = g.k();
    let mut groups: BTreeMap<(VertexId, VertexId), Vec<Segment>> = BTreeMap::new();
    for seg in segments(a)? {
        if seg.start == seg.end {
            return Err(violation(format!(
                "closed trail at {} in an M1 subgraph",
                g.label(seg.start)
            )));
        }
        groups
            .entry((seg.start.min(seg.end), seg.start.max(seg.end)))
            .or_default()
            .push(seg);
    }

    let mut slots: Vec<Option<Circuit>> = vec![None; k];
    for ((x, y), mut segs) in groups {
        if segs.len() != 2 {
            return Err(violation(format!(
                "{} trails between {} and {}",
                segs.len(),
                g.label(x),
                g.label(y)
            )));
        }
        let second = segs.pop().expect("two segments");
        let first = segs.pop().expect("two segments");
        let mut edges = first.edges.clone();
        let mut vertices = first.vertices.clone();
        // walk back along the other trail to close the circuit
        let mut back_edges = second.edges.clone();
        let mut back_vertices = second.vertices.clone();
        if second.start == first.end {
            back_vertices.pop();
        } else {
            back_edges.reverse();
            back_vertices.reverse();
            back_vertices.pop();
        }
        edges.extend(back_edges);
        vertices.extend(back_vertices.into_iter().skip(1));

        let matching: Vec<usize> = edges.iter().copied().filter(|&e| a.edge(e).is_matching()).collect();
        if matching.len() != 1 {
            return Err(violation(format!(
                "circuit through {} and {} holds {} matching edges",
                g.label(x),
                g.label(y),
                matching.len()
            )));
        }
        let pair = a.edge(matching[0]);
        let (ia, ib) = match (g.ring_index(pair.a), g.ring_index(pair.b)) {
            (Some(ia), Some(ib)) => (ia.min(ib), ia.max(ib)),
            _ => return Err(violation("matching edge touches w0 or w1")),
        };
        let position = match (ia, ib) {
            (i, j) if i % 2 == 0 && j == i + 1 => i / 2,
            _ => {
                return Err(violation(format!(
                    "matching pair at ring positions {ia}, {ib} is not an M1 pair"
                )))
            }
        };
        if slots[position].is_some() {
            return Err(violation(format!("two circuits claim ring slot {position}")));
        }
        let plus = edges.iter().any(|&e| a.edge(e).origin == EdgeOrigin::Tree(g.e_plus()));
        slots[position] = Some(Circuit {
            role: if plus {
                CircuitRole::Special
            } else {
                CircuitRole::Regular
            },
            edges,
            vertices,
            anchors: vec![x, y],
        });
    }
    let circuits: Vec<Circuit> = slots
        .into_iter()
        .enumerate()
        .map(|(j, c)| c.ok_or_else(|| violation(format!("no circuit at ring slot {j}"))))
        .collect::<Result<_>>()?;

    if circuits[0].role != CircuitRole::Special {
        return Err(violation("{w0,w1} is not on the slot-0 circuit"));
    }
    for j in 0..k {
        let (c, next) = (&circuits[j], &circuits[(j + 1) % k]);
        let shared: Vec<_> = c.anchors.iter().filter(|v| next.anchors.contains(v)).collect();
        if shared.len() != 1 {
            return Err(violation(format!(
                "circuits {j} and {} share {} vertices",
                (j + 1) % k,
                shared.len()
            )));
        }
        let len = c.len();
        let ok = match c.role {
            CircuitRole::Special => matches!(len, 4 | 7 | 10),
            _ => matches!(len, 2 | 5 | 8),
        };
        if !ok {
            return Err(violation(format!("circuit {j} ({:?}) has length {len}", c.role)));
        }
        if len == 2 && next.len() == 2 {
            return Err(violation(format!(
                "adjacent doubled edges at slots {j}, {}",
                (j + 1) % k
            )));
        }
    }
    Ok(CircuitDecomposition {
        shape: Shape::Ring,
        circuits,
    })
}

fn spine(a: &EulerianSubgraph, g: &KDonut) -> Result<CircuitDecomposition> {
    let n = a.vertex_count();
    let mut pendants: Vec<Circuit> = Vec::new();
    let mut spine_segs: Vec<Segment> = Vec::new();
    for seg in segments(a)? {
        if seg.start == seg.end {
            let mut vertices = seg.vertices;
            vertices.pop();
            pendants.push(Circuit {
                role: CircuitRole::Pendant,
                edges: seg.edges,
                vertices,
                anchors: vec![seg.start],
            });
        } else {
            spine_segs.push(seg);
        }
    }

    let anchors: Vec<VertexId> = (0..n).filter(|&v| a.degree(v) == 4).collect();
    for &d in &anchors {
        let hanging = pendants.iter().filter(|p| p.anchors[0] == d).count();
        if hanging != 1 {
            return Err(violation(format!("{} circuits hang off {}", hanging, g.label(d))));
        }
    }
    if let Some(p) = pendants.iter().find(|p| p.len() != 2 && p.len() != 3) {
        return Err(violation(format!(
            "circuit hanging off {} has length {}",
            g.label(p.anchors[0]),
            p.len()
        )));
    }

    // chain the remaining trails into one cycle
    let start = *anchors.first().ok_or_else(|| violation("no degree-4 vertices"))?;
    let mut taken = vec![false; spine_segs.len()];
    let mut edges = Vec::new();
    let mut vertices = Vec::new();
    let mut cur = start;
    loop {
        let (i, forward) = spine_segs
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .find_map(|(i, s)| {
                if s.start == cur {
                    Some((i, true))
                } else if s.end == cur {
                    Some((i, false))
                } else {
                    None
                }
            })
            .ok_or_else(|| violation(format!("large cycle breaks at {}", g.label(cur))))?;
        taken[i] = true;
        let s = &spine_segs[i];
        let (mut es, mut vs) = (s.edges.clone(), s.vertices.clone());
        if !forward {
            es.reverse();
            vs.reverse();
        }
        vs.pop();
        edges.extend(es);
        vertices.extend(vs);
        cur = if forward { s.end } else { s.start };
        if cur == start {
            break;
        }
    }
    if taken.iter().any(|&t| !t) {
        return Err(violation("trails outside the large cycle"));
    }
    if !edges.iter().any(|&e| a.edge(e).origin == EdgeOrigin::Tree(g.e_plus())) {
        return Err(violation("{w0,w1} is not on the large cycle"));
    }

    pendants.sort_by_key(|p| (g.ring_index(p.anchors[0]), p.anchors[0]));
    let mut circuits = vec![Circuit {
        role: CircuitRole::Spine,
        edges,
        vertices,
        anchors,
    }];
    circuits.extend(pendants);
    Ok(CircuitDecomposition {
        shape: Shape::Spine,
        circuits,
    })
}
