//! Eulerian subgraphs `T ⊎ M`, their circuit structure, Euler tours
//! (adversarial and Hierholzer) and shortcutting to Hamiltonian cycles.

mod btour;
mod circuits;

pub use btour::{b_tour_m1, b_tour_m2};
pub use circuits::{classify_circuits, Circuit, CircuitDecomposition, CircuitRole, Shape};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, KDonut, Metric, VertexId};
use crate::matching::{MatchingKind, PerfectMatching};
use crate::sampler::{Dsu, OneTree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeOrigin {
    Tree(EdgeId),
    /// A matching pair, realised by the listed shortest path in the k-donut.
    Matching {
        path: Vec<VertexId>,
    },
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiEdge {
    pub a: VertexId,
    pub b: VertexId,
    pub cost: u32,
    pub origin: EdgeOrigin,
}

impl MultiEdge {
    pub fn other(&self, v: VertexId) -> VertexId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn is_matching(&self) -> bool {
        matches!(self.origin, EdgeOrigin::Matching { .. })
    }
}

/// Connected multigraph with all degrees even. Matching pairs are single
/// edges whose cost is the metric distance of their endpoints.
#[derive(Clone, Debug)]
pub struct EulerianSubgraph {
    edges: Vec<MultiEdge>,
    adjacency: Vec<Vec<(VertexId, usize)>>,
    matching_kind: Option<MatchingKind>,
}

/// `T ⊎ M`, tree edges first (in tree order) then matching pairs.
pub fn eulerian_subgraph(g: &KDonut, metric: &Metric, t: &OneTree, m: &PerfectMatching) -> Result<EulerianSubgraph> {
    let mut edges: Vec<MultiEdge> = t
        .edges()
        .iter()
        .map(|&e| {
            let edge = g.edge(e);
            MultiEdge {
                a: edge.a,
                b: edge.b,
                cost: 1,
                origin: EdgeOrigin::Tree(e),
            }
        })
        .collect();
    edges.extend(m.pairs.iter().map(|&(a, b)| MultiEdge {
        a,
        b,
        cost: metric.dist(a, b),
        origin: EdgeOrigin::Matching {
            path: metric.shortest_path(g, a, b),
        },
    }));
    EulerianSubgraph::build(g.vertex_count(), edges, Some(m.kind)).map_err(|e| e.with_choice(&t.choice().to_string()))
}

impl EulerianSubgraph {
    /// A generic Eulerian multigraph from `(a, b, cost)` triples.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId, u32)]) -> Result<Self> {
        let edges = edges
            .iter()
            .map(|&(a, b, cost)| MultiEdge {
                a,
                b,
                cost,
                origin: EdgeOrigin::Plain,
            })
            .collect();
        Self::build(n, edges, None)
    }

    fn build(n: usize, edges: Vec<MultiEdge>, matching_kind: Option<MatchingKind>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n || e.a == e.b {
                return Err(Error::InvalidInput(format!("bad edge {}-{}", e.a, e.b)));
            }
            adjacency[e.a].push((e.b, i));
            adjacency[e.b].push((e.a, i));
        }
        if let Some(v) = (0..n).find(|&v| adjacency[v].len() % 2 == 1) {
            return Err(Error::structure(
                "parity",
                format!("vertex {v} has odd degree {}", adjacency[v].len()),
            ));
        }
        let mut dsu = Dsu::new(n);
        for e in &edges {
            dsu.union(e.a, e.b);
        }
        let isolated = adjacency.iter().filter(|adj| adj.is_empty()).count();
        if dsu.components() - isolated != 1 {
            return Err(Error::structure("connectivity", "subgraph is not connected"));
        }
        Ok(EulerianSubgraph {
            edges,
            adjacency,
            matching_kind,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[MultiEdge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &MultiEdge {
        &self.edges[i]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    /// `(neighbour, edge index)` pairs.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, usize)] {
        &self.adjacency[v]
    }

    pub fn matching_kind(&self) -> Option<MatchingKind> {
        self.matching_kind
    }

    /// `c(T) + c(M)`.
    pub fn cost(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.cost)).sum()
    }
}

/// Closed walk `t_0, ..., t_m = t_0` using every subgraph edge once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tour {
    pub vertices: Vec<VertexId>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    pub cost: u64,
}

impl Tour {
    pub(crate) fn new(a: &EulerianSubgraph, vertices: Vec<VertexId>, edges: Vec<usize>) -> Self {
        let cost = edges.iter().map(|&e| u64::from(a.edge(e).cost)).sum();
        Tour { vertices, edges, cost }
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    /// How often each vertex appears, not counting the closing return.
    pub fn visits(&self, n: usize) -> Vec<usize> {
        let mut visits = vec![0; n];
        for &v in &self.vertices[..self.vertices.len() - 1] {
            visits[v] += 1;
        }
        visits
    }

    /// Checks that this is an Euler tour of `a`.
    pub fn check(&self, a: &EulerianSubgraph) -> Result<()> {
        let bad = |d: String| Err(Error::structure("euler-tour", d));
        if self.vertices.len() != self.edges.len() + 1 {
            return bad("vertex and edge sequences disagree in length".into());
        }
        if self.vertices.first() != self.vertices.last() {
            return bad("walk is not closed".into());
        }
        let mut used = vec![false; a.edge_count()];
        for (i, &e) in self.edges.iter().enumerate() {
            let edge = a.edge(e);
            let (x, y) = (self.vertices[i], self.vertices[i + 1]);
            if !((edge.a == x && edge.b == y) || (edge.a == y && edge.b == x)) {
                return bad(format!("step {i} does not follow edge {e}"));
            }
            if std::mem::replace(&mut used[e], true) {
                return bad(format!("edge {e} used twice"));
            }
        }
        if used.iter().any(|&u| !u) {
            return bad("some edge is never used".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HamiltonianCycle {
    /// `h_0, ..., h_{n-1}`; the return to `h_0` is implicit.
    pub vertices: Vec<VertexId>,
    pub cost: u64,
    /// Lengths of the maximal runs of tour positions dropped as repeats.
    pub skipped_runs: Vec<usize>,
}

/// Keeps the first occurrence of every vertex; the closing return to `t_0`
/// is kept as the edge back to `h_0`.
pub fn shortcut(r: &Tour, m: &Metric) -> HamiltonianCycle {
    let n = m.vertex_count();
    let mut seen = vec![false; n];
    let mut vertices = Vec::with_capacity(n);
    let mut skipped_runs = Vec::new();
    let mut run = 0;
    for &v in &r.vertices[..r.vertices.len() - 1] {
        if seen[v] {
            run += 1;
        } else {
            if run > 0 {
                skipped_runs.push(run);
                run = 0;
            }
            seen[v] = true;
            vertices.push(v);
        }
    }
    if run > 0 {
        skipped_runs.push(run);
    }
    let cost = m.cycle_cost(&vertices);
    HamiltonianCycle {
        vertices,
        cost,
        skipped_runs,
    }
}

/// Euler tour by circuit splicing (Hierholzer), with each adjacency list
/// shuffled by `rng`. Starts at the lowest vertex that has an edge.
pub fn hierholzer_tour(a: &EulerianSubgraph, rng: &mut impl Rng) -> Result<Tour> {
    let n = a.vertex_count();
    let mut adjacency: Vec<Vec<(VertexId, usize)>> = a.adjacency.clone();
    for adj in &mut adjacency {
        adj.shuffle(rng);
    }
    let start = (0..n)
        .find(|&v| !adjacency[v].is_empty())
        .ok_or_else(|| Error::InvalidInput("subgraph has no edges".into()))?;
    let mut next = vec![0usize; n];
    let mut used = vec![false; a.edge_count()];
    // (vertex, edge used to reach it)
    let mut stack: Vec<(VertexId, Option<usize>)> = vec![(start, None)];
    let mut vertices = Vec::with_capacity(a.edge_count() + 1);
    let mut edges = Vec::with_capacity(a.edge_count());
    while let Some(&(v, via)) = stack.last() {
        let adj = &adjacency[v];
        while next[v] < adj.len() && used[adj[next[v]].1] {
            next[v] += 1;
        }
        if next[v] == adj.len() {
            stack.pop();
            vertices.push(v);
            if let Some(e) = via {
                edges.push(e);
            }
        } else {
            let (w, e) = adj[next[v]];
            used[e] = true;
            stack.push((w, Some(e)));
        }
    }
    vertices.reverse();
    edges.reverse();
    let tour = Tour::new(a, vertices, edges);
    tour.check(a)?;
    Ok(tour)
}
