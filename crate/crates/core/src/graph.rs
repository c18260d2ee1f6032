//! The graphic k-donut and its shortest-path metric.
//!
//! Vertices are stored densely: `u_i` is `i`, `v_i` is `2k + i`, `w0` is `4k`
//! and `w1` is `4k + 1`. Every ring index is taken mod `2k`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};

/// Dense vertex index into a [`KDonut`].
pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Outer(usize),
    Inner(usize),
    W0,
    W1,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Outer(i) => write!(f, "u{i}"),
            Vertex::Inner(i) => write!(f, "v{i}"),
            Vertex::W0 => f.write_str("w0"),
            Vertex::W1 => f.write_str("w1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    Outer,
    Inner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// `{u_i, u_{i+1}}`
    OuterRing(usize),
    /// `{v_i, v_{i+1}}`
    InnerRing(usize),
    /// `{u_i, v_i}`
    Spoke(usize),
    /// `{w0, w1}`, the edge every 1-tree is seeded with.
    Plus,
    W0Outer,
    W0Inner,
    W1Outer,
    W1Inner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn other(&self, v: VertexId) -> VertexId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug)]
pub struct KDonut {
    k: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    lookup: HashMap<(VertexId, VertexId), EdgeId>,
}

pub fn build_kdonut(k: usize) -> Result<KDonut> {
    KDonut::new(k)
}

impl KDonut {
    pub fn new(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidK(k));
        }
        let m = 2 * k;
        let n = 4 * k + 2;
        let mut g = KDonut {
            k,
            edges: Vec::with_capacity(6 * k + 5),
            adjacency: vec![Vec::new(); n],
            lookup: HashMap::new(),
        };
        for i in 0..m {
            g.push_edge(g.outer(i), g.outer(i + 1), EdgeKind::OuterRing(i));
            g.push_edge(g.inner(i), g.inner(i + 1), EdgeKind::InnerRing(i));
            g.push_edge(g.outer(i), g.inner(i), EdgeKind::Spoke(i));
        }
        g.push_edge(g.w0(), g.w1(), EdgeKind::Plus);
        g.push_edge(g.w0(), g.outer(0), EdgeKind::W0Outer);
        g.push_edge(g.w0(), g.inner(0), EdgeKind::W0Inner);
        g.push_edge(g.w1(), g.outer(1), EdgeKind::W1Outer);
        g.push_edge(g.w1(), g.inner(1), EdgeKind::W1Inner);
        Ok(g)
    }

    fn push_edge(&mut self, a: VertexId, b: VertexId, kind: EdgeKind) {
        let id = EdgeId(self.edges.len());
        self.edges.push(Edge { a, b, kind });
        self.adjacency[a].push((b, id));
        self.adjacency[b].push((a, id));
        self.lookup.insert((a.min(b), a.max(b)), id);
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of each ring, `2k`.
    pub fn ring_len(&self) -> usize {
        2 * self.k
    }

    pub fn vertex_count(&self) -> usize {
        4 * self.k + 2
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn outer(&self, i: usize) -> VertexId {
        i % (2 * self.k)
    }

    pub fn inner(&self, i: usize) -> VertexId {
        2 * self.k + i % (2 * self.k)
    }

    pub fn w0(&self) -> VertexId {
        4 * self.k
    }

    pub fn w1(&self) -> VertexId {
        4 * self.k + 1
    }

    pub fn id(&self, v: Vertex) -> VertexId {
        match v {
            Vertex::Outer(i) => self.outer(i),
            Vertex::Inner(i) => self.inner(i),
            Vertex::W0 => self.w0(),
            Vertex::W1 => self.w1(),
        }
    }

    pub fn vertex(&self, id: VertexId) -> Vertex {
        let m = 2 * self.k;
        match id {
            _ if id < m => Vertex::Outer(id),
            _ if id < 2 * m => Vertex::Inner(id - m),
            _ if id == 2 * m => Vertex::W0,
            _ if id == 2 * m + 1 => Vertex::W1,
            _ => panic!("vertex id {id} out of range for k = {}", self.k),
        }
    }

    pub fn label(&self, id: VertexId) -> String {
        self.vertex(id).to_string()
    }

    /// Inverse of [`KDonut::label`].
    pub fn parse_label(&self, label: &str) -> Option<VertexId> {
        match label {
            "w0" => Some(self.w0()),
            "w1" => Some(self.w1()),
            _ => {
                let (ring, idx) = label.split_at(1);
                let i: usize = idx.parse().ok()?;
                if i >= 2 * self.k {
                    return None;
                }
                match ring {
                    "u" => Some(self.outer(i)),
                    "v" => Some(self.inner(i)),
                    _ => None,
                }
            }
        }
    }

    pub fn ring_of(&self, id: VertexId) -> Option<Ring> {
        match self.vertex(id) {
            Vertex::Outer(_) => Some(Ring::Outer),
            Vertex::Inner(_) => Some(Ring::Inner),
            _ => None,
        }
    }

    /// Ring index `i` of `u_i` / `v_i`; `None` for `w0`, `w1`.
    pub fn ring_index(&self, id: VertexId) -> Option<usize> {
        match self.vertex(id) {
            Vertex::Outer(i) | Vertex::Inner(i) => Some(i),
            _ => None,
        }
    }

    /// The other vertex of the pair `(u_i, v_i)`.
    pub fn partner(&self, id: VertexId) -> Option<VertexId> {
        match self.vertex(id) {
            Vertex::Outer(i) => Some(self.inner(i)),
            Vertex::Inner(i) => Some(self.outer(i)),
            _ => None,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }

    fn expect_edge(&self, a: VertexId, b: VertexId) -> EdgeId {
        self.edge_between(a, b)
            .expect("k-donut edge table is complete by construction")
    }

    pub fn outer_edge(&self, i: usize) -> EdgeId {
        self.expect_edge(self.outer(i), self.outer(i + 1))
    }

    pub fn inner_edge(&self, i: usize) -> EdgeId {
        self.expect_edge(self.inner(i), self.inner(i + 1))
    }

    pub fn spoke(&self, i: usize) -> EdgeId {
        self.expect_edge(self.outer(i), self.inner(i))
    }

    pub fn e_plus(&self) -> EdgeId {
        self.expect_edge(self.w0(), self.w1())
    }

    pub fn edge_label(&self, id: EdgeId) -> String {
        let e = self.edge(id);
        format!("{}-{}", self.label(e.a), self.label(e.b))
    }

    /// A Hamiltonian cycle of unit-cost edges:
    /// `w0, u0, u_{2k-1}, ..., u2, v2, ..., v_{2k-1}, v0, v1, u1, w1`.
    pub fn hamiltonian_cycle(&self) -> Vec<VertexId> {
        let m = 2 * self.k;
        let mut cycle = vec![self.w0(), self.outer(0)];
        cycle.extend((2..m).rev().map(|i| self.outer(i)));
        cycle.extend((2..m).map(|i| self.inner(i)));
        cycle.extend([self.inner(0), self.inner(1), self.outer(1), self.w1()]);
        cycle
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }
}

impl Serialize for KDonut {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let vertices: Vec<String> = (0..self.vertex_count()).map(|v| self.label(v)).collect();
        let edges: Vec<[String; 2]> = self.edges.iter().map(|e| [self.label(e.a), self.label(e.b)]).collect();
        let mut s = serializer.serialize_struct("KDonut", 3)?;
        s.serialize_field("k", &self.k)?;
        s.serialize_field("vertices", &vertices)?;
        s.serialize_field("edges", &edges)?;
        s.end()
    }
}

/// All-pairs shortest-path distances of a k-donut (the TSP cost function).
#[derive(Clone, Debug)]
pub struct Metric {
    n: usize,
    dist: Vec<u32>,
}

pub fn shortest_path_metric(g: &KDonut) -> Metric {
    Metric::new(g)
}

impl Metric {
    /// One BFS per source vertex.
    pub fn new(g: &KDonut) -> Self {
        let n = g.vertex_count();
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                let d = row[v] + 1;
                for &(w, _) in g.neighbors(v) {
                    if row[w] == u32::MAX {
                        row[w] = d;
                        queue.push_back(w);
                    }
                }
            }
        }
        Metric { n, dist }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, a: VertexId, b: VertexId) -> u32 {
        self.dist[a * self.n + b]
    }

    /// A shortest path from `a` to `b` (inclusive), always stepping to the
    /// lowest-id neighbour that gets closer to `b`.
    pub fn shortest_path(&self, g: &KDonut, a: VertexId, b: VertexId) -> Vec<VertexId> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let d = self.dist(cur, b);
            cur = g
                .neighbors(cur)
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| self.dist(w, b) + 1 == d)
                .min()
                .expect("BFS distances always admit a descending neighbour");
            path.push(cur);
        }
        path
    }

    /// Cost of the closed walk `cycle[0], ..., cycle[last], cycle[0]`.
    pub fn cycle_cost(&self, cycle: &[VertexId]) -> u64 {
        if cycle.len() < 2 {
            return 0;
        }
        let open: u64 = cycle.windows(2).map(|w| u64::from(self.dist(w[0], w[1]))).sum();
        open + u64::from(self.dist(cycle[cycle.len() - 1], cycle[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_definition() {
        let g = build_kdonut(3).unwrap();
        assert_eq!(g.vertex_count(), 14);
        assert_eq!(g.edge_count(), 23);
        let g = build_kdonut(4).unwrap();
        assert_eq!(g.vertex_count(), 18);
        assert_eq!(g.edge_count(), 29);
    }

    #[test]
    fn rejects_small_k() {
        assert!(matches!(build_kdonut(2), Err(Error::InvalidK(2))));
        assert!(matches!(build_kdonut(0), Err(Error::InvalidK(0))));
    }

    #[test]
    fn degrees() {
        for k in 3..8 {
            let g = build_kdonut(k).unwrap();
            for v in 0..g.vertex_count() {
                let special = [g.outer(0), g.outer(1), g.inner(0), g.inner(1)];
                let expected = if special.contains(&v) { 4 } else { 3 };
                assert_eq!(g.degree(v), expected, "{}", g.label(v));
            }
            assert!(g.is_connected());
        }
    }

    #[test]
    fn topology_k4() {
        // Every ring has a {0,1} edge, w0 hangs off index 0 and w1 off index 1.
        let g = build_kdonut(4).unwrap();
        for (a, b) in [
            ("u0", "u1"),
            ("v0", "v1"),
            ("u7", "u0"),
            ("w0", "u0"),
            ("w0", "v0"),
            ("w1", "u1"),
            ("w1", "v1"),
            ("w0", "w1"),
        ] {
            let (a, b) = (g.parse_label(a).unwrap(), g.parse_label(b).unwrap());
            assert!(g.edge_between(a, b).is_some());
        }
        assert!(g.edge_between(g.w0(), g.outer(1)).is_none());
    }

    #[test]
    fn labels_round_trip() {
        let g = build_kdonut(5).unwrap();
        for v in 0..g.vertex_count() {
            assert_eq!(g.parse_label(&g.label(v)), Some(v));
        }
        assert_eq!(g.parse_label("u10"), None);
        assert_eq!(g.parse_label("x1"), None);
    }

    #[test]
    fn metric_examples() {
        let g = build_kdonut(3).unwrap();
        let m = shortest_path_metric(&g);
        assert_eq!(m.dist(g.outer(0), g.inner(0)), 1);
        assert_eq!(m.dist(g.outer(0), g.outer(2)), 2);
        assert_eq!(m.dist(g.outer(0), g.inner(1)), 2);
        assert_eq!(m.dist(g.outer(0), g.outer(3)), 3);
        assert_eq!(m.dist(g.w0(), g.w1()), 1);
    }

    #[test]
    fn hamiltonian_cycle_is_valid() {
        for k in 3..12 {
            let g = build_kdonut(k).unwrap();
            let cycle = g.hamiltonian_cycle();
            assert_eq!(cycle.len(), g.vertex_count());
            let mut seen = vec![false; g.vertex_count()];
            for &v in &cycle {
                assert!(!seen[v]);
                seen[v] = true;
            }
            for i in 0..cycle.len() {
                let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
                assert!(g.edge_between(a, b).is_some(), "{} {}", g.label(a), g.label(b));
            }
            let m = shortest_path_metric(&g);
            assert_eq!(m.cycle_cost(&cycle), 4 * k as u64 + 2);
        }
    }

    #[test]
    fn shortest_path_has_metric_length() {
        let g = build_kdonut(6).unwrap();
        let m = shortest_path_metric(&g);
        for a in 0..g.vertex_count() {
            for b in 0..g.vertex_count() {
                let p = m.shortest_path(&g, a, b);
                assert_eq!(p.len() as u32 - 1, m.dist(a, b));
                assert!(p.windows(2).all(|w| g.edge_between(w[0], w[1]).is_some()));
            }
        }
    }

    #[test]
    fn serializes_labels() {
        let g = build_kdonut(3).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["k"], 3);
        assert_eq!(v["vertices"].as_array().unwrap().len(), 14);
        assert_eq!(v["edges"][0], serde_json::json!(["u0", "u1"]));
        assert_eq!(v["edges"].as_array().unwrap().len(), 23);
    }
}
