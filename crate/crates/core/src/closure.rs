//! K_{r,s} copy detection and the bootstrap closure fixed point.
//!
//! Detection contract: a missing edge (u,v) with u on the r-side completes a
//! copy iff some (s-1)-subset T of N(u)\{v} satisfies
//! |(N(v) ∩ ⋂_{b∈T} N(b)) \ {u}| >= r-1. Enumeration is exponential only in
//! s-1; candidates are pre-filtered and the running intersection is cut off
//! as soon as it drops below r-1.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::Error;
use crate::graph::{count_ones, edge_id, iter_ones, Edge, Graph};
use crate::pattern::Pattern;
use crate::Result;

const WORD: usize = 64;

/// Which completed copy to record when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyChoice {
    /// The lexicographically smallest witness (compare side_a sorted, then
    /// side_b sorted, over both orientations of the edge). Reproducible
    /// across runs; used whenever witness sets are tracked.
    Lexicographic,
    /// The first witness found in deterministic enumeration order. Still a
    /// pure function of the graph and edge, but cheaper: the subset search
    /// stops at the first hit. Used for bulk Monte Carlo.
    FirstFound,
}

/// A completed copy of K_{r,s}: `side_a` has r vertices, `side_b` has s.
/// The completing edge has one endpoint in each side, and every other cross
/// pair is present in the pre-addition graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CopyWitness {
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
}

impl CopyWitness {
    /// All rs cross edges of the copy, including the completing one.
    pub fn cross_edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.side_a.len() * self.side_b.len());
        for &a in &self.side_a {
            for &b in &self.side_b {
                out.push(Edge {
                    u: a.min(b),
                    v: a.max(b),
                });
            }
        }
        out
    }

    pub fn vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.side_a.iter().chain(&self.side_b).copied().collect();
        vs.sort_unstable();
        vs
    }

    /// Checks this witness against the pre-addition graph `g`: correct side
    /// sizes, disjoint sides, `e` split across sides and absent, all other
    /// cross pairs present.
    pub fn validate(&self, g: &Graph, e: Edge, pattern: Pattern) -> Result<()> {
        if self.side_a.len() != pattern.r() || self.side_b.len() != pattern.s() {
            return Err(Error::Internal(format!(
                "witness sides ({},{}) do not match {}",
                self.side_a.len(),
                self.side_b.len(),
                pattern
            )));
        }
        let vs = self.vertices();
        if vs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Internal("witness sides overlap".into()));
        }
        let a_has = |x| self.side_a.binary_search(&x).is_ok();
        if a_has(e.u) == a_has(e.v) {
            return Err(Error::Internal(format!(
                "completing edge {e} does not cross the bipartition"
            )));
        }
        if g.has_edge(e) {
            return Err(Error::Internal(format!("completing edge {e} already present")));
        }
        for f in self.cross_edges() {
            if f != e && !g.has_edge(f) {
                return Err(Error::Internal(format!("cross edge {f} missing from witness")));
            }
        }
        Ok(())
    }
}

/// One infection of the bootstrap process.
#[derive(Debug, Clone, Serialize)]
pub struct InfectionStep {
    /// 1-based step index.
    pub t: usize,
    pub edge: Edge,
    pub copy: CopyWitness,
}

/// Fixed point of the bootstrap process plus the infection trace.
#[derive(Debug, Clone)]
pub struct ClosureResult {
    pub final_graph: Graph,
    pub trace: Vec<InfectionStep>,
    pub percolated: bool,
}

impl ClosureResult {
    /// Replays the trace from `initial`, validating every copy against the
    /// intermediate graph state.
    pub fn replay_check(&self, initial: &Graph) -> Result<()> {
        let mut g = initial.clone();
        for (i, step) in self.trace.iter().enumerate() {
            if step.t != i + 1 {
                return Err(Error::Internal(format!("step index {} at position {i}", step.t)));
            }
            step.copy
                .validate(&g, step.edge, self.pattern_of_step(step)?)?;
            g.add_edge(step.edge)?;
        }
        if g != self.final_graph {
            return Err(Error::Internal("trace does not replay to the final graph".into()));
        }
        Ok(())
    }

    fn pattern_of_step(&self, step: &InfectionStep) -> Result<Pattern> {
        Pattern::new(step.copy.side_a.len(), step.copy.side_b.len())
    }
}

struct Detector<'a> {
    g: &'a Graph,
    r: usize,
    s: usize,
    words: usize,
    /// Scratch intersection rows, one per subset-recursion level.
    scratch: Vec<u64>,
}

impl<'a> Detector<'a> {
    fn new(g: &'a Graph, pattern: Pattern) -> Detector<'a> {
        let words = g.words_per_row();
        Detector {
            g,
            r: pattern.r(),
            s: pattern.s(),
            words,
            scratch: vec![0; pattern.s() * words],
        }
    }

    /// Search with `u` on the r-side and `v` on the s-side. In first-only
    /// mode returns as soon as any witness exists; otherwise scans all
    /// (s-1)-subsets and keeps the lexicographic minimum in `best`.
    fn search_oriented(
        &mut self,
        u: usize,
        v: usize,
        first_only: bool,
        best: &mut Option<CopyWitness>,
    ) -> bool {
        let need_a = self.r - 1;
        let need_b = self.s - 1;
        if self.g.degree(u) < need_b || self.g.degree(v) < need_a {
            return false;
        }
        // base = N(v) \ {u}
        let mut base = self.g.row(v).to_vec();
        base[u / WORD] &= !(1u64 << (u % WORD));
        if count_ones(&base) < need_a {
            return false;
        }
        // candidates for the s-side: b in N(u)\{v} whose neighborhood keeps
        // the r-side intersection viable
        let mut cands: Vec<usize> = Vec::new();
        for b in self.g.neighbors(u) {
            if b == v {
                continue;
            }
            let shared: usize = base
                .iter()
                .zip(self.g.row(b))
                .map(|(x, y)| (x & y).count_ones() as usize)
                .sum();
            if shared >= need_a {
                cands.push(b);
            }
        }
        if cands.len() < need_b {
            return false;
        }
        let mut chosen = Vec::with_capacity(need_b);
        self.extend(u, v, &cands, 0, &base, &mut chosen, first_only, best)
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        &mut self,
        u: usize,
        v: usize,
        cands: &[usize],
        start: usize,
        inter: &[u64],
        chosen: &mut Vec<usize>,
        first_only: bool,
        best: &mut Option<CopyWitness>,
    ) -> bool {
        let need_b = self.s - 1;
        let need_a = self.r - 1;
        if chosen.len() == need_b {
            if count_ones(inter) < need_a {
                return false;
            }
            let mut side_a: Vec<usize> = std::iter::once(u)
                .chain(iter_ones(inter).take(need_a))
                .collect();
            side_a.sort_unstable();
            let mut side_b: Vec<usize> = std::iter::once(v).chain(chosen.iter().copied()).collect();
            side_b.sort_unstable();
            let cand = CopyWitness { side_a, side_b };
            let better = match best {
                None => true,
                Some(b) => (&cand.side_a, &cand.side_b) < (&b.side_a, &b.side_b),
            };
            if better {
                *best = Some(cand);
            }
            return true;
        }
        let level = chosen.len();
        let mut found = false;
        for i in start..cands.len() {
            if cands.len() - i < need_b - level {
                break;
            }
            let b = cands[i];
            // next-level intersection lives in the scratch row for this level
            let mut pop = 0usize;
            for w in 0..self.words {
                let x = inter[w] & self.g.row(b)[w];
                self.scratch[level * self.words + w] = x;
                pop += x.count_ones() as usize;
            }
            if pop < need_a {
                continue;
            }
            let next: Vec<u64> =
                self.scratch[level * self.words..(level + 1) * self.words].to_vec();
            chosen.push(b);
            let hit = self.extend(u, v, cands, i + 1, &next, chosen, first_only, best);
            chosen.pop();
            if hit {
                found = true;
                if first_only {
                    return true;
                }
            }
        }
        found
    }
}

/// Returns the recorded copy completed by adding the absent edge `e`, or
/// `None` if no copy exists. With [`CopyChoice::Lexicographic`] this is the
/// smallest witness over both orientations of `e` (one orientation if r = s).
pub fn completes_copy_with(
    g: &Graph,
    e: Edge,
    pattern: Pattern,
    choice: CopyChoice,
) -> Result<Option<CopyWitness>> {
    if e.v >= g.n() {
        return Err(Error::Input(format!("edge {e} out of range for n = {}", g.n())));
    }
    if g.has_edge(e) {
        return Err(Error::Input(format!("edge {e} already present")));
    }
    if g.n() < pattern.vertex_count() {
        return Ok(None);
    }
    let first_only = choice == CopyChoice::FirstFound;
    let mut det = Detector::new(g, pattern);
    let mut best = None;
    let hit = det.search_oriented(e.u, e.v, first_only, &mut best);
    if !(first_only && hit) && pattern.r() != pattern.s() {
        det.search_oriented(e.v, e.u, first_only, &mut best);
    }
    Ok(best)
}

/// [`completes_copy_with`] using the lexicographic tie-break.
pub fn completes_copy(g: &Graph, e: Edge, pattern: Pattern) -> Result<Option<CopyWitness>> {
    completes_copy_with(g, e, pattern, CopyChoice::Lexicographic)
}

struct Worklist {
    n: usize,
    words: usize,
    queue: VecDeque<u32>,
    /// Symmetric per-vertex bit rows marking queued edges.
    inq: Vec<u64>,
}

impl Worklist {
    fn new(n: usize, words: usize) -> Worklist {
        Worklist {
            n,
            words,
            queue: VecDeque::new(),
            inq: vec![0; n * words],
        }
    }

    fn push(&mut self, e: Edge) {
        self.inq[e.u * self.words + e.v / WORD] |= 1 << (e.v % WORD);
        self.inq[e.v * self.words + e.u / WORD] |= 1 << (e.u % WORD);
        self.queue.push_back(edge_id(self.n, e) as u32);
    }

    fn pop(&mut self) -> Option<Edge> {
        let id = self.queue.pop_front()?;
        let e = crate::graph::id_to_edge(self.n, id as usize);
        self.inq[e.u * self.words + e.v / WORD] &= !(1 << (e.v % WORD));
        self.inq[e.v * self.words + e.u / WORD] &= !(1 << (e.u % WORD));
        Some(e)
    }
}

/// Runs the bootstrap process to its fixed point.
///
/// Deterministic engine order: a FIFO worklist initialized with every absent
/// edge in canonical lexicographic order. After infecting (u,v), absent edges
/// with both endpoints in {u,v} ∪ N(u) ∪ N(v) are re-enqueued (any newly
/// completable edge lies in a copy containing both u and v, so both its
/// endpoints are in that set). A final full verification pass guards the
/// pruning; it must find no new infection.
pub fn closure_with(g: &Graph, pattern: Pattern, choice: CopyChoice) -> ClosureResult {
    let n = g.n();
    let words = g.words_per_row();
    let mut cur = g.clone();
    let mut trace = Vec::new();

    if n >= pattern.vertex_count() && !cur.is_complete() {
        let mut det_scratch = Worklist::new(n, words);
        for u in 0..n {
            for v in (u + 1)..n {
                let e = Edge { u, v };
                if !cur.has_edge(e) {
                    det_scratch.push(e);
                }
            }
        }
        let mut wl = det_scratch;
        loop {
            drain(&mut cur, pattern, choice, &mut wl, &mut trace);
            // verification pass over all absent edges in canonical order
            let mut found = false;
            'verify: for u in 0..n {
                for v in (u + 1)..n {
                    let e = Edge { u, v };
                    if cur.has_edge(e) {
                        continue;
                    }
                    if let Some(copy) = completes_copy_with(&cur, e, pattern, choice)
                        .expect("absent in-range edge")
                    {
                        infect(&mut cur, pattern, e, copy, &mut wl, &mut trace);
                        found = true;
                        break 'verify;
                    }
                }
            }
            if !found {
                break;
            }
        }
    }

    let percolated = cur.is_complete();
    ClosureResult {
        final_graph: cur,
        trace,
        percolated,
    }
}

fn drain(
    cur: &mut Graph,
    pattern: Pattern,
    choice: CopyChoice,
    wl: &mut Worklist,
    trace: &mut Vec<InfectionStep>,
) {
    while let Some(e) = wl.pop() {
        if cur.has_edge(e) {
            continue;
        }
        if let Some(copy) =
            completes_copy_with(cur, e, pattern, choice).expect("absent in-range edge")
        {
            infect(cur, pattern, e, copy, wl, trace);
        }
    }
}

fn infect(
    cur: &mut Graph,
    pattern: Pattern,
    e: Edge,
    copy: CopyWitness,
    wl: &mut Worklist,
    trace: &mut Vec<InfectionStep>,
) {
    debug_assert!(copy.validate(cur, e, pattern).is_ok());
    cur.add_edge(e).expect("in-range edge");
    trace.push(InfectionStep {
        t: trace.len() + 1,
        edge: e,
        copy,
    });
    // S = {u,v} ∪ N(u) ∪ N(v), then enqueue absent unqueued pairs within S
    let words = cur.words_per_row();
    let mut s_mask: Vec<u64> = cur
        .row(e.u)
        .iter()
        .zip(cur.row(e.v))
        .map(|(a, b)| a | b)
        .collect();
    s_mask[e.u / WORD] |= 1 << (e.u % WORD);
    s_mask[e.v / WORD] |= 1 << (e.v % WORD);
    let members: Vec<usize> = iter_ones(&s_mask).collect();
    for &a in &members {
        let row = cur.row(a);
        let inq = &wl.inq[a * words..(a + 1) * words];
        // bits strictly above a, inside S, absent, not already queued
        let mut to_add: Vec<usize> = Vec::new();
        for w in (a / WORD)..words {
            let mut m = s_mask[w] & !row[w] & !inq[w];
            if w == a / WORD {
                m &= !((1u64 << (a % WORD)) - 1) & !(1u64 << (a % WORD));
            }
            while m != 0 {
                let b = w * WORD + m.trailing_zeros() as usize;
                m &= m - 1;
                to_add.push(b);
            }
        }
        for b in to_add {
            wl.push(Edge { u: a, v: b });
        }
    }
}

/// Bootstrap closure with the lexicographic copy tie-break (reproducible
/// witness statistics).
pub fn closure(g: &Graph, pattern: Pattern) -> ClosureResult {
    closure_with(g, pattern, CopyChoice::Lexicographic)
}

/// Whether the closure of `g` is the complete graph. Uses the first-found
/// copy choice; the closure edge set is independent of that choice.
pub fn percolates(g: &Graph, pattern: Pattern) -> bool {
    closure_with(g, pattern, CopyChoice::FirstFound).percolated
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GnpSpec;

    fn pat(r: usize, s: usize) -> Pattern {
        Pattern::new(r, s).unwrap()
    }

    fn complete_minus(n: usize, e: Edge) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if (Edge { u, v }) != e {
                    g.add_edge(Edge { u, v }).unwrap();
                }
            }
        }
        g
    }

    #[test]
    fn detects_unique_copy_in_near_complete_graph() {
        for (r, s) in [(2, 2), (3, 2), (3, 3), (4, 3)] {
            let n = r + s;
            let e = Edge { u: 0, v: 1 };
            let g = complete_minus(n, e);
            let copy = completes_copy(&g, e, pat(r, s)).unwrap().expect("copy exists");
            assert_eq!(copy.vertices(), (0..n).collect::<Vec<_>>());
            copy.validate(&g, e, pat(r, s)).unwrap();
        }
    }

    #[test]
    fn no_copy_in_empty_graph() {
        let g = Graph::new(8);
        assert!(completes_copy(&g, Edge { u: 0, v: 1 }, pat(2, 2))
            .unwrap()
            .is_none());
    }

    #[test]
    fn present_edge_is_precondition_error() {
        let g = Graph::complete(5);
        assert!(completes_copy(&g, Edge { u: 0, v: 1 }, pat(2, 2)).is_err());
    }

    #[test]
    fn lexicographic_choice_is_minimal() {
        // K_6 minus (0,1): many (2,2) copies complete it; the lexicographic
        // minimum uses the smallest vertices.
        let e = Edge { u: 0, v: 1 };
        let g = complete_minus(6, e);
        let copy = completes_copy(&g, e, pat(2, 2)).unwrap().unwrap();
        assert_eq!(copy.side_a, vec![0, 2]);
        assert_eq!(copy.side_b, vec![1, 3]);
    }

    #[test]
    fn closure_single_step() {
        let e = Edge { u: 2, v: 4 };
        let g = complete_minus(6, e);
        let res = closure(&g, pat(3, 3));
        assert!(res.percolated);
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.trace[0].edge, e);
        res.replay_check(&g).unwrap();
    }

    #[test]
    fn closure_empty_graph_is_inert() {
        let g = Graph::new(10);
        let res = closure(&g, pat(3, 3));
        assert!(!res.percolated);
        assert!(res.trace.is_empty());
        assert_eq!(res.final_graph, g);
    }

    #[test]
    fn closure_small_n_is_noop() {
        let g = Graph::complete(4);
        let res = closure(&g, pat(3, 3));
        assert!(res.percolated); // already complete
        assert!(res.trace.is_empty());

        let g2 = complete_minus(4, Edge { u: 0, v: 1 });
        let res2 = closure(&g2, pat(3, 3));
        assert!(!res2.percolated);
        assert!(res2.trace.is_empty());
    }

    #[test]
    fn percolates_trivial_cases() {
        assert!(percolates(&Graph::complete(7), pat(3, 3)));
        let e = Edge { u: 0, v: 5 };
        assert!(percolates(&complete_minus(6, e), pat(3, 3)));
    }

    #[test]
    fn isolated_vertex_blocks_percolation() {
        // A vertex of degree 0 can never gain its first edge: every copy
        // through it needs prior neighbors.
        for seed in 0..20u64 {
            let mut g = Graph::sample_gnp(&GnpSpec::new(9, 0.7, seed).unwrap()).unwrap();
            // rebuild with vertex 8 isolated
            let mut planted = Graph::new(9);
            for e in g.edges() {
                if e.v != 8 {
                    planted.add_edge(e).unwrap();
                }
            }
            g = planted;
            let res = closure(&g, pat(2, 2));
            assert!(!res.percolated);
            for step in &res.trace {
                assert!(step.edge.u != 8 && step.edge.v != 8);
            }
        }
    }

    #[test]
    fn choice_does_not_change_closure_set() {
        for seed in 0..30u64 {
            let g = Graph::sample_gnp(&GnpSpec::new(9, 0.45, seed).unwrap()).unwrap();
            let a = closure_with(&g, pat(2, 3), CopyChoice::Lexicographic);
            let b = closure_with(&g, pat(2, 3), CopyChoice::FirstFound);
            assert_eq!(a.final_graph, b.final_graph, "seed {seed}");
        }
    }
}
