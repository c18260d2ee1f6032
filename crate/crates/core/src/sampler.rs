//! The max-entropy 1-tree sampler specialised to the k-donut.
//!
//! A 1-tree is fully determined by `2k + 1` fair bits, consumed in this order:
//!
//! * `k` bits for the blocks at odd `i` (ascending): bit 0 takes the spoke
//!   `{u_i, v_i}`, bit 1 takes `{u_{i+1}, v_{i+1}}`;
//! * `k - 1` bits for the even positions `i != 0` (ascending): bit 0 takes
//!   `{u_i, u_{i+1}}`, bit 1 takes `{v_i, v_{i+1}}`;
//! * one bit for `w0` (0: `{w0, u0}`, 1: `{w0, v0}`);
//! * one bit for `w1` (0: `{w1, u1}`, 1: `{w1, v1}`).
//!
//! Position 0 has no pair of its own: the LP gives `{u0,u1}` and `{v0,v1}`
//! value 0, and the two gadget bits connect that side instead.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, KDonut, VertexId};

/// Largest k accepted by [`enumerate_one_trees`] (`2^21` trees).
pub const MAX_ENUMERATION_K: usize = 10;

/// Source of independent fair bits.
pub trait FairBits {
    fn next_bit(&mut self) -> bool;
}

/// Counter-based bit source: a ChaCha8 stream keyed by `(seed, stream)`.
/// Bits are taken least-significant first from successive 64-bit words.
#[derive(Clone, Debug)]
pub struct ChaChaBits {
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
}

impl ChaChaBits {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ChaChaBits { rng, word: 0, left: 0 }
    }

    /// The underlying generator, for consumers that need more than bits.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl FairBits for ChaChaBits {
    fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        bit
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChoiceVector {
    k: usize,
    bits: Vec<bool>,
}

impl ChoiceVector {
    pub fn new(k: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != 2 * k + 1 {
            return Err(Error::InvalidInput(format!(
                "choice vector for k = {k} needs {} bits, got {}",
                2 * k + 1,
                bits.len()
            )));
        }
        Ok(ChoiceVector { k, bits })
    }

    pub fn zeros(k: usize) -> Self {
        ChoiceVector {
            k,
            bits: vec![false; 2 * k + 1],
        }
    }

    /// Bit `p` of `index` becomes choice bit `p`.
    pub fn from_index(k: usize, index: u64) -> Self {
        let bits = (0..2 * k + 1).map(|p| (index >> p) & 1 == 1).collect();
        ChoiceVector { k, bits }
    }

    pub fn draw(k: usize, source: &mut impl FairBits) -> Self {
        let bits = (0..2 * k + 1).map(|_| source.next_bit()).collect();
        ChoiceVector { k, bits }
    }

    /// Inverse of [`ChoiceVector::from_index`]; only for `2k + 1 <= 64`.
    pub fn index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (p, &b)| acc | (u64::from(b) << p))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Choice for the block at odd position `i`: `false` = 0-block.
    pub fn block(&self, i: usize) -> bool {
        debug_assert!(i % 2 == 1);
        self.bits[i / 2]
    }

    /// Choice at even position `i != 0`: `false` = outer edge.
    pub fn junction(&self, i: usize) -> bool {
        debug_assert!(i.is_multiple_of(2) && i != 0);
        self.bits[self.k + i / 2 - 1]
    }

    pub fn w0_inner(&self) -> bool {
        self.bits[2 * self.k - 1]
    }

    pub fn w1_inner(&self) -> bool {
        self.bits[2 * self.k]
    }
}

impl fmt::Display for ChoiceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ChoiceVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidInput(format!("bad choice bit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.len() < 7 || bits.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "choice vector length {} is not 2k+1 for k >= 3",
                bits.len()
            )));
        }
        ChoiceVector::new((bits.len() - 1) / 2, bits)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneTree {
    edges: Vec<EdgeId>,
    degree: Vec<u32>,
    choice: ChoiceVector,
}

impl OneTree {
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn degree(&self, v: VertexId) -> u32 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn choice(&self) -> &ChoiceVector {
        &self.choice
    }

    /// Every edge has unit cost.
    pub fn cost(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }

    /// Checks the structural invariants of a sampled 1-tree: `{w0,w1}` and
    /// every LP 1-edge present, `4k + 2` edges, a spanning tree once `{w0,w1}`
    /// is removed, `deg(w0) = deg(w1) = 2`, one odd vertex per pair.
    pub fn check(&self, g: &KDonut) -> Result<()> {
        let fail = |detail: String| Err(Error::structure("one-tree", detail).with_choice(&self.choice.to_string()));
        let k = g.k();
        if self.edges.len() != 4 * k + 2 {
            return fail(format!("{} edges, expected {}", self.edges.len(), 4 * k + 2));
        }
        if !self.contains(g.e_plus()) {
            return fail("missing {w0,w1}".into());
        }
        for i in (1..2 * k).step_by(2) {
            if !self.contains(g.outer_edge(i)) || !self.contains(g.inner_edge(i)) {
                return fail(format!("missing a ring 1-edge at position {i}"));
            }
        }
        let mut dsu = Dsu::new(g.vertex_count());
        for &e in &self.edges {
            if e == g.e_plus() {
                continue;
            }
            let edge = g.edge(e);
            if !dsu.union(edge.a, edge.b) {
                return fail(format!("cycle through {}", g.edge_label(e)));
            }
        }
        if dsu.components() != 1 {
            return fail("not spanning".into());
        }
        if self.degree[g.w0()] != 2 || self.degree[g.w1()] != 2 {
            return fail("w0 or w1 does not have degree 2".into());
        }
        for i in 0..2 * k {
            if (self.degree[g.outer(i)] + self.degree[g.inner(i)]).is_multiple_of(2) {
                return fail(format!("pair {i} does not have exactly one odd vertex"));
            }
        }
        Ok(())
    }
}

/// Builds the 1-tree selected by `choice`.
pub fn one_tree_from_choices(g: &KDonut, choice: ChoiceVector) -> Result<OneTree> {
    let k = g.k();
    if choice.k != k {
        return Err(Error::InvalidInput(format!(
            "choice vector is for k = {}, graph has k = {k}",
            choice.k
        )));
    }
    let mut edges = Vec::with_capacity(4 * k + 2);
    edges.push(g.e_plus());
    for i in (1..2 * k).step_by(2) {
        edges.push(g.outer_edge(i));
        edges.push(g.inner_edge(i));
    }
    for i in (1..2 * k).step_by(2) {
        edges.push(if choice.block(i) { g.spoke(i + 1) } else { g.spoke(i) });
    }
    for i in (2..2 * k).step_by(2) {
        edges.push(if choice.junction(i) {
            g.inner_edge(i)
        } else {
            g.outer_edge(i)
        });
    }
    let w0_target = if choice.w0_inner() { g.inner(0) } else { g.outer(0) };
    let w1_target = if choice.w1_inner() { g.inner(1) } else { g.outer(1) };
    edges.push(g.edge_between(g.w0(), w0_target).expect("gadget edge"));
    edges.push(g.edge_between(g.w1(), w1_target).expect("gadget edge"));

    let mut degree = vec![0u32; g.vertex_count()];
    for &e in &edges {
        let edge = g.edge(e);
        degree[edge.a] += 1;
        degree[edge.b] += 1;
    }
    Ok(OneTree { edges, degree, choice })
}

/// One draw of the sampler: `2k + 1` bits from `source`, then the tree.
pub fn sample_one_tree(g: &KDonut, source: &mut impl FairBits) -> OneTree {
    let choice = ChoiceVector::draw(g.k(), source);
    one_tree_from_choices(g, choice).expect("choice vector drawn for this graph")
}

/// Every 1-tree the sampler can produce, in choice-index order.
pub fn enumerate_one_trees(g: &KDonut) -> Result<OneTrees<'_>> {
    if g.k() > MAX_ENUMERATION_K {
        return Err(Error::BudgetExceeded {
            what: "1-tree enumeration",
            k: g.k(),
            max: MAX_ENUMERATION_K,
        });
    }
    Ok(OneTrees {
        g,
        next: 0,
        end: 1 << (2 * g.k() + 1),
    })
}

/// Streaming iterator returned by [`enumerate_one_trees`].
pub struct OneTrees<'a> {
    g: &'a KDonut,
    next: u64,
    end: u64,
}

impl Iterator for OneTrees<'_> {
    type Item = OneTree;

    fn next(&mut self) -> Option<OneTree> {
        if self.next == self.end {
            return None;
        }
        let choice = ChoiceVector::from_index(self.g.k(), self.next);
        self.next += 1;
        Some(one_tree_from_choices(self.g, choice).expect("index sized for this graph"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for OneTrees<'_> {}

/// `O_i = 1` iff `u_i` has odd degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ParityVector(Vec<bool>);

impl ParityVector {
    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// The odd vertex of pair `i`.
    pub fn odd_vertex(&self, g: &KDonut, i: usize) -> VertexId {
        if self.0[i] {
            g.outer(i)
        } else {
            g.inner(i)
        }
    }

    /// Bit `i` of the result is `O_i`; only for `2k <= 64`.
    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }
}

pub fn parity_vector(t: &OneTree, g: &KDonut) -> Result<ParityVector> {
    let mut bits = Vec::with_capacity(g.ring_len());
    for i in 0..g.ring_len() {
        let u_odd = t.degree(g.outer(i)) % 2 == 1;
        let v_odd = t.degree(g.inner(i)) % 2 == 1;
        if u_odd == v_odd {
            return Err(Error::structure(
                "claim1",
                format!("pair {i} has {} odd vertices", if u_odd { 2 } else { 0 }),
            )
            .with_choice(&t.choice.to_string()));
        }
        bits.push(u_odd);
    }
    Ok(ParityVector(bits))
}

/// Whether the block at odd position `i` took `{u_i, v_i}` (a 0-block),
/// read off the tree's edges rather than its choice bits.
pub fn block_types(t: &OneTree, g: &KDonut) -> Vec<BlockType> {
    (1..g.ring_len())
        .step_by(2)
        .map(|i| match (t.contains(g.spoke(i)), t.contains(g.spoke(i + 1))) {
            (true, false) => BlockType::Zero,
            (false, true) => BlockType::One,
            _ => BlockType::Malformed,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockType {
    Zero,
    One,
    Malformed,
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
    components: usize,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            components: n,
        }
    }

    pub(crate) fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// False if `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.components
    }
}
