//! Bitset-backed undirected simple graphs on `[n]` and seeded G(n,p) sampling.
//!
//! Adjacency is one fixed-width bit row per vertex; the closure engine's hot
//! loop is row AND plus popcount, so everything here is tuned for that shape.
//! Target scale is n up to a few thousand.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

const WORD: usize = 64;

/// Iterate the set bit positions of a bit row.
pub fn iter_ones(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * WORD + b)
            }
        })
    })
}

/// Population count of a bit row.
pub fn count_ones(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

/// An edge in canonical order: `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    /// Canonicalizes endpoint order; rejects self-loops.
    pub fn new(a: usize, b: usize) -> Result<Edge> {
        if a == b {
            return Err(Error::Input(format!("self-loop at vertex {a}")));
        }
        Ok(Edge {
            u: a.min(b),
            v: a.max(b),
        })
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

/// Index of an edge in canonical lexicographic order on (u,v), u < v:
/// (0,1), (0,2), ..., (0,n-1), (1,2), ...
pub fn edge_id(n: usize, e: Edge) -> usize {
    e.u * n - e.u * (e.u + 3) / 2 + e.v - 1
}

/// Inverse of [`edge_id`].
pub fn id_to_edge(n: usize, mut id: usize) -> Edge {
    let mut u = 0;
    while id >= n - 1 - u {
        id -= n - 1 - u;
        u += 1;
    }
    Edge { u, v: u + 1 + id }
}

/// Specification of a seeded Erdős–Rényi sample G(n,p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnpSpec {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl GnpSpec {
    pub fn new(n: usize, p: f64, seed: u64) -> Result<GnpSpec> {
        if n == 0 {
            return Err(Error::Input("vertex count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("probability {p} not in [0,1]")));
        }
        Ok(GnpSpec { n, p, seed })
    }
}

/// Undirected simple graph with per-vertex bit-vector adjacency rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
    edge_count: usize,
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        assert!(n > 0, "vertex count must be positive");
        let words = n.div_ceil(WORD);
        Graph {
            n,
            words,
            adj: vec![0; n * words],
            edge_count: 0,
        }
    }

    /// The complete graph K_n.
    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(Edge { u, v }).unwrap();
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    /// Neighbor bit row of `u`.
    pub fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    fn check_vertex(&self, u: usize) -> Result<()> {
        if u >= self.n {
            Err(Error::Input(format!(
                "vertex {} out of range for n = {}",
                u, self.n
            )))
        } else {
            Ok(())
        }
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        debug_assert!(e.v < self.n);
        self.adj[e.u * self.words + e.v / WORD] >> (e.v % WORD) & 1 == 1
    }

    /// Inserts `e`; returns whether the edge was newly added.
    pub fn add_edge(&mut self, e: Edge) -> Result<bool> {
        self.check_vertex(e.v)?;
        if self.has_edge(e) {
            return Ok(false);
        }
        self.adj[e.u * self.words + e.v / WORD] |= 1 << (e.v % WORD);
        self.adj[e.v * self.words + e.u / WORD] |= 1 << (e.u % WORD);
        self.edge_count += 1;
        Ok(true)
    }

    pub fn degree(&self, u: usize) -> usize {
        count_ones(self.row(u))
    }

    /// N(u) ∩ N(v) as a bit row.
    pub fn common_neighbors(&self, u: usize, v: usize) -> Result<Vec<u64>> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::Input("common_neighbors requires u != v".into()));
        }
        Ok(self
            .row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| a & b)
            .collect())
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        iter_ones(self.row(u))
    }

    pub fn is_complete(&self) -> bool {
        self.edge_count == self.n * (self.n - 1) / 2
    }

    /// All edges in canonical lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .skip_while(move |&v| v < u)
                .map(move |v| Edge { u, v })
        })
    }

    /// Full-rescan consistency check: symmetry, no self-loops, edge_count.
    pub fn validate(&self) -> Result<()> {
        let mut count = 0;
        for u in 0..self.n {
            for v in self.neighbors(u) {
                if v >= self.n {
                    return Err(Error::Internal(format!("neighbor {v} out of range")));
                }
                if v == u {
                    return Err(Error::Internal(format!("self-loop at {u}")));
                }
                if !self.has_edge(Edge {
                    u: u.min(v),
                    v: u.max(v),
                }) || self.row(v)[u / WORD] >> (u % WORD) & 1 != 1
                {
                    return Err(Error::Internal(format!("asymmetric edge ({u},{v})")));
                }
                count += 1;
            }
        }
        if count != 2 * self.edge_count {
            return Err(Error::Internal(format!(
                "edge_count {} inconsistent with rescan {}",
                self.edge_count,
                count / 2
            )));
        }
        Ok(())
    }

    /// Seeded G(n,p): one uniform draw per potential edge in canonical edge
    /// order, so the sample is a pure function of (n, p, seed).
    pub fn sample_gnp(spec: &GnpSpec) -> Result<Graph> {
        GnpSpec::new(spec.n, spec.p, spec.seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut g = Graph::new(spec.n);
        for u in 0..spec.n {
            for v in (u + 1)..spec.n {
                let x: f64 = rng.random();
                if x < spec.p {
                    g.add_edge(Edge { u, v })?;
                }
            }
        }
        Ok(g)
    }

    /// Reads the edge-list text format: first line `n m`, then m lines `u v`
    /// with 0-indexed endpoints, u < v. Duplicates and self-loops are parse
    /// errors.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))??;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("header must be `n m`".into()))?;
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("header must be `n m`".into()))?;
        if it.next().is_some() {
            return Err(Error::Parse("trailing tokens in header".into()));
        }
        if n == 0 {
            return Err(Error::Parse("vertex count must be positive".into()));
        }
        let mut g = Graph::new(n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |t: Option<&str>| -> Result<usize> {
                t.and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad edge line {}: `{line}`", i + 2)))
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse(format!("trailing tokens on line {}", i + 2)));
            }
            if u >= v {
                return Err(Error::Parse(format!(
                    "line {}: endpoints must satisfy u < v, got {u} {v}",
                    i + 2
                )));
            }
            if v >= n {
                return Err(Error::Parse(format!("line {}: vertex {v} >= n = {n}", i + 2)));
            }
            if !g.add_edge(Edge { u, v })? {
                return Err(Error::Parse(format!("line {}: duplicate edge {u} {v}", i + 2)));
            }
        }
        if g.edge_count != m {
            return Err(Error::Parse(format!(
                "header claims {m} edges, found {}",
                g.edge_count
            )));
        }
        Ok(g)
    }

    pub fn write_edge_list<W: Write>(&self, writer: &mut W) -> Result<()> {
        writeln!(writer, "{} {}", self.n, self.edge_count)?;
        for e in self.edges() {
            writeln!(writer, "{} {}", e.u, e.v)?;
        }
        Ok(())
    }
}

/// A set of edges over `[n]`, stored as a bitset indexed by [`edge_id`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    n: usize,
    bits: Vec<u64>,
    len: usize,
}

impl EdgeSet {
    pub fn new(n: usize) -> EdgeSet {
        let m = n * (n - 1) / 2;
        EdgeSet {
            n,
            bits: vec![0; m.div_ceil(WORD)],
            len: 0,
        }
    }

    pub fn singleton(n: usize, e: Edge) -> EdgeSet {
        let mut s = EdgeSet::new(n);
        s.insert(e);
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, e: Edge) -> bool {
        let id = edge_id(self.n, e);
        self.bits[id / WORD] >> (id % WORD) & 1 == 1
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        let id = edge_id(self.n, e);
        let newly = self.bits[id / WORD] >> (id % WORD) & 1 == 0;
        if newly {
            self.bits[id / WORD] |= 1 << (id % WORD);
            self.len += 1;
        }
        newly
    }

    pub fn remove(&mut self, e: Edge) -> bool {
        let id = edge_id(self.n, e);
        let present = self.bits[id / WORD] >> (id % WORD) & 1 == 1;
        if present {
            self.bits[id / WORD] &= !(1 << (id % WORD));
            self.len -= 1;
        }
        present
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        self.len = count_ones(&self.bits);
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &EdgeSet) -> bool {
        self.bits.iter().zip(&other.bits).any(|(a, b)| a & b != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        iter_ones(&self.bits).map(|id| id_to_edge(self.n, id))
    }

    /// Distinct endpoints of the member edges.
    pub fn vertices(&self) -> Vec<usize> {
        let mut mask = vec![0u64; self.n.div_ceil(WORD)];
        for e in self.iter() {
            mask[e.u / WORD] |= 1 << (e.u % WORD);
            mask[e.v / WORD] |= 1 << (e.v % WORD);
        }
        iter_ones(&mask).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_edge_basics() {
        let mut g = Graph::new(3);
        g.add_edge(Edge::new(0, 1).unwrap()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(Edge { u: 0, v: 1 }));
        // idempotent
        assert!(!g.add_edge(Edge::new(1, 0).unwrap()).unwrap());
        assert_eq!(g.edge_count(), 1);
        g.validate().unwrap();
    }

    #[test]
    fn complete_on_four() {
        let mut g = Graph::new(4);
        for u in 0..4 {
            for v in (u + 1)..4 {
                g.add_edge(Edge { u, v }).unwrap();
            }
        }
        assert!(g.is_complete());
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn add_edge_rejects_out_of_range() {
        let mut g = Graph::new(3);
        assert!(g.add_edge(Edge { u: 1, v: 3 }).is_err());
        assert!(Edge::new(2, 2).is_err());
    }

    #[test]
    fn common_neighbors_cases() {
        let k4 = Graph::complete(4);
        let cn = k4.common_neighbors(0, 1).unwrap();
        assert_eq!(iter_ones(&cn).collect::<Vec<_>>(), vec![2, 3]);

        let empty = Graph::new(4);
        assert_eq!(count_ones(&empty.common_neighbors(0, 1).unwrap()), 0);

        // star centered at 0 on n=5
        let mut star = Graph::new(5);
        for v in 1..5 {
            star.add_edge(Edge { u: 0, v }).unwrap();
        }
        let cn = star.common_neighbors(1, 2).unwrap();
        assert_eq!(iter_ones(&cn).collect::<Vec<_>>(), vec![0]);

        assert!(k4.common_neighbors(0, 4).is_err());
    }

    #[test]
    fn gnp_extremes() {
        let full = Graph::sample_gnp(&GnpSpec::new(5, 1.0, 7).unwrap()).unwrap();
        assert!(full.is_complete());
        assert_eq!(full.edge_count(), 10);
        let empty = Graph::sample_gnp(&GnpSpec::new(5, 0.0, 7).unwrap()).unwrap();
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn gnp_reproducible() {
        let spec = GnpSpec::new(40, 0.3, 12345).unwrap();
        let a = Graph::sample_gnp(&spec).unwrap();
        let b = Graph::sample_gnp(&spec).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn gnp_edge_count_near_mean() {
        // n=1000, p=0.5: within 4 sigma of 0.5*C(1000,2).
        let g = Graph::sample_gnp(&GnpSpec::new(1000, 0.5, 42).unwrap()).unwrap();
        let mean = 0.5 * 499_500.0;
        let sigma = (499_500.0 * 0.25f64).sqrt();
        let dev = (g.edge_count() as f64 - mean).abs();
        assert!(dev < 4.0 * sigma, "edge count {} deviates {dev:.1}", g.edge_count());
    }

    #[test]
    fn gnp_mean_over_many_samples() {
        // >= 1000 samples at (n=50, p=0.3): mean within 5 sigma of p*C(50,2).
        let trials = 1000;
        let total: usize = (0..trials)
            .map(|i| {
                Graph::sample_gnp(&GnpSpec::new(50, 0.3, 9000 + i as u64).unwrap())
                    .unwrap()
                    .edge_count()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        let expect = 0.3 * 1225.0;
        let sigma = (1225.0 * 0.3 * 0.7 / trials as f64).sqrt();
        assert!((mean - expect).abs() < 5.0 * sigma, "mean {mean}");
    }

    #[test]
    fn edge_id_roundtrip() {
        let n = 11;
        let mut id = 0;
        for u in 0..n {
            for v in (u + 1)..n {
                assert_eq!(edge_id(n, Edge { u, v }), id);
                assert_eq!(id_to_edge(n, id), Edge { u, v });
                id += 1;
            }
        }
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::sample_gnp(&GnpSpec::new(12, 0.4, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = Graph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn edge_list_rejects_bad_input() {
        assert!(Graph::read_edge_list("3 1\n1 1\n".as_bytes()).is_err()); // self-loop
        assert!(Graph::read_edge_list("3 2\n0 1\n0 1\n".as_bytes()).is_err()); // duplicate
        assert!(Graph::read_edge_list("3 1\n1 0\n".as_bytes()).is_err()); // u >= v
        assert!(Graph::read_edge_list("3 1\n0 3\n".as_bytes()).is_err()); // out of range
        assert!(Graph::read_edge_list("3 2\n0 1\n".as_bytes()).is_err()); // count mismatch
    }

    #[test]
    fn edge_set_ops() {
        let mut s = EdgeSet::new(6);
        assert!(s.insert(Edge { u: 0, v: 3 }));
        assert!(s.insert(Edge { u: 2, v: 5 }));
        assert!(!s.insert(Edge { u: 0, v: 3 }));
        assert_eq!(s.len(), 2);
        assert!(s.contains(Edge { u: 2, v: 5 }));
        assert_eq!(s.vertices(), vec![0, 2, 3, 5]);
        let t = EdgeSet::singleton(6, Edge { u: 0, v: 3 });
        assert!(t.is_subset(&s));
        assert!(!s.is_subset(&t));
        let mut u = EdgeSet::new(6);
        u.union_with(&s);
        assert_eq!(u, s);
    }
}
