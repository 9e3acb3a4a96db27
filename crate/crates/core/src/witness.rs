//! Witness-set and red-edge tracking, plus runtime checks of the structural
//! inequalities a bootstrap run must satisfy.
//!
//! Every edge of the closure gets a witness-edge set WE(e): `{e}` for
//! original edges, and for an infected edge the union of WE over the other
//! edges of its recorded completed copy. The red-edge algorithm then
//! reconstructs the witness graph F(e) of a target edge from the sequence of
//! copies whose witness sets are contained in WE(target), and per-step
//! statistics of the partial unions B_t feed the inequality checks.
//!
//! These inequalities are proven facts about the process, so a reported
//! violation is an engine bug, never a refutation; the checks exist as the
//! test suite's primary bug detector for the detection and tie-breaking
//! logic. Tracking is opt-in: it costs memory proportional to the total
//! witness size and stays off during bulk Monte Carlo.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::closure::{closure, ClosureResult, CopyWitness};
use crate::error::Error;
use crate::graph::{count_ones, Edge, EdgeSet, Graph};
use crate::pattern::Pattern;
use crate::Result;

const WORD: usize = 64;

/// Witness data for one edge of the closure.
#[derive(Debug, Clone)]
pub struct WitnessRecord {
    pub edge: Edge,
    /// WE(e), always a subset of the original edge set.
    pub witness: EdgeSet,
    /// Infection recursion depth: 0 for original edges, 1 + max over the
    /// recorded copy's other edges otherwise.
    pub depth: usize,
}

impl WitnessRecord {
    /// e(F(e)) = |WE(e)|.
    pub fn e_f(&self) -> usize {
        self.witness.len()
    }

    /// ν(F(e)): distinct endpoints of the witness edges.
    pub fn nu_f(&self) -> usize {
        self.witness.vertices().len()
    }
}

/// Per-edge witness records for one realization of the witness-set algorithm.
#[derive(Debug, Clone)]
pub struct WitnessMap {
    records: BTreeMap<Edge, WitnessRecord>,
}

impl WitnessMap {
    pub fn get(&self, e: Edge) -> Option<&WitnessRecord> {
        self.records.get(&e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &WitnessRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Runs the closure with the lexicographic copy choice and builds witness
/// records for every edge of the closure.
pub fn tracked_closure(g: &Graph, pattern: Pattern) -> Result<(ClosureResult, WitnessMap)> {
    let res = closure(g, pattern);
    let n = g.n();
    let mut records = BTreeMap::new();
    for e in g.edges() {
        records.insert(
            e,
            WitnessRecord {
                edge: e,
                witness: EdgeSet::singleton(n, e),
                depth: 0,
            },
        );
    }
    for step in &res.trace {
        let mut witness = EdgeSet::new(n);
        let mut depth = 0;
        for f in step.copy.cross_edges() {
            if f == step.edge {
                continue;
            }
            let rec: &WitnessRecord = records.get(&f).ok_or_else(|| {
                Error::Internal(format!(
                    "copy edge {f} of step {} has no witness record",
                    step.t
                ))
            })?;
            witness.union_with(&rec.witness);
            depth = depth.max(rec.depth);
        }
        records.insert(
            step.edge,
            WitnessRecord {
                edge: step.edge,
                witness,
                depth: depth + 1,
            },
        );
    }
    Ok((res, WitnessMap { records }))
}

/// The witness-set algorithm: WE(e) for every edge of the closure.
pub fn run_witness_algorithm(g: &Graph, pattern: Pattern) -> Result<WitnessMap> {
    tracked_closure(g, pattern).map(|(_, m)| m)
}

/// Statistics of B_t = (H¹ ∪ … ∪ Hᵗ) \ {e₁..e_t} and of the auxiliary graph
/// on the copies H¹..Hᵗ (adjacent when sharing an edge).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepStats {
    pub t: usize,
    /// e(B_t).
    pub e_bt: usize,
    /// ν(B_t): vertices of the union graph H¹ ∪ … ∪ Hᵗ.
    pub nu_bt: usize,
    /// Component count of the auxiliary graph.
    pub l_t: usize,
    /// Vertex-multiplicity excess Σ_ν (c_t(ν) - 1).
    pub k_t: usize,
}

/// Output of the red-edge algorithm for one target edge.
#[derive(Debug, Clone)]
pub struct RedEdgeTrace {
    pub target: Edge,
    /// Red edges e₁..eₘ in infection order; eₘ is the target.
    pub red_edges: Vec<Edge>,
    /// H¹..Hᵐ: the copy completed by each red edge.
    pub copies: Vec<CopyWitness>,
    pub per_step: Vec<StepStats>,
    /// F(target) reconstructed as (H¹ ∪ … ∪ Hᵐ) \ {e₁..eₘ}.
    pub witness_graph_edges: EdgeSet,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> UnionFind {
        UnionFind { parent: Vec::new() }
    }

    fn add(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Runs the red-edge algorithm for `target`, which must be an infected edge
/// of the given closure run.
pub fn red_edge_trace(
    map: &WitnessMap,
    run: &ClosureResult,
    target: Edge,
) -> Result<RedEdgeTrace> {
    let n = run.final_graph.n();
    let target_pos = run
        .trace
        .iter()
        .position(|s| s.edge == target)
        .ok_or_else(|| Error::Domain(format!("target {target} was not infected in this run")))?;
    let target_we = &map
        .get(target)
        .ok_or_else(|| Error::Internal(format!("no witness record for {target}")))?
        .witness;

    // Red edges: infected edges up to the target whose witness set is
    // contained in WE(target) and which are not themselves witness edges.
    let mut red_edges = Vec::new();
    let mut copies = Vec::new();
    for step in &run.trace[..=target_pos] {
        let rec = map
            .get(step.edge)
            .ok_or_else(|| Error::Internal(format!("no witness record for {}", step.edge)))?;
        if rec.witness.is_subset(target_we) && !target_we.contains(step.edge) {
            red_edges.push(step.edge);
            copies.push(step.copy.clone());
        }
    }
    let m = red_edges.len();
    if red_edges.last() != Some(&target) {
        return Err(Error::Internal(format!(
            "red-edge sequence for {target} does not end at the target"
        )));
    }

    // Copy edge sets and vertex masks.
    let vwords = n.div_ceil(WORD);
    let copy_edges: Vec<EdgeSet> = copies
        .iter()
        .map(|c| {
            let mut s = EdgeSet::new(n);
            for f in c.cross_edges() {
                s.insert(f);
            }
            s
        })
        .collect();
    let copy_verts: Vec<Vec<u64>> = copies
        .iter()
        .map(|c| {
            let mut mask = vec![0u64; vwords];
            for v in c.vertices() {
                mask[v / WORD] |= 1 << (v % WORD);
            }
            mask
        })
        .collect();

    let mut per_step = Vec::with_capacity(m);
    let mut cum_edges = EdgeSet::new(n);
    let mut cum_verts = vec![0u64; vwords];
    let mut uf = UnionFind::new();
    for t in 1..=m {
        let idx = t - 1;
        // e_j ∈ H^j \ (H¹ ∪ … ∪ H^{j-1}): the red edge is new in its copy.
        if cum_edges.contains(red_edges[idx]) {
            return Err(Error::Internal(format!(
                "red edge {} already present in earlier copies",
                red_edges[idx]
            )));
        }
        cum_edges.union_with(&copy_edges[idx]);
        for (a, b) in cum_verts.iter_mut().zip(&copy_verts[idx]) {
            *a |= b;
        }
        let id = uf.add();
        for j in 0..idx {
            if copy_edges[idx].intersects(&copy_edges[j]) {
                uf.union(id, j);
            }
        }

        // B_t: every red edge so far lies inside the cumulative union.
        debug_assert!(red_edges[..t].iter().all(|&e| cum_edges.contains(e)));
        let e_bt = cum_edges.len() - t;
        let nu_bt = count_ones(&cum_verts);

        // Component count and vertex-multiplicity excess: Σ_C |V(C)| − ν(B_t)
        // where V(C) is the vertex set of the copies in component C.
        let mut roots: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for j in 0..t {
            let root = uf.find(j);
            let entry = roots.entry(root).or_insert_with(|| vec![0u64; vwords]);
            for (a, b) in entry.iter_mut().zip(&copy_verts[j]) {
                *a |= b;
            }
        }
        let l_t = roots.len();
        let sum_component_vertices: usize = roots.values().map(|m| count_ones(m)).sum();
        let k_t = sum_component_vertices - nu_bt;

        per_step.push(StepStats {
            t,
            e_bt,
            nu_bt,
            l_t,
            k_t,
        });
    }

    let mut witness_graph_edges = cum_edges;
    for &e in &red_edges {
        witness_graph_edges.remove(e);
    }

    Ok(RedEdgeTrace {
        target,
        red_edges,
        copies,
        per_step,
        witness_graph_edges,
    })
}

/// Hypothesis gate for the structural inequalities: r, s >= 3 and
/// r <= (s-2)^2 + s.
pub fn in_proven_range(pattern: Pattern) -> bool {
    pattern.s() >= 3 && pattern.r() <= (pattern.s() - 2) * (pattern.s() - 2) + pattern.s()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Checked,
    OutOfProvenRange,
}

/// Outcome of the structural-lemma checks for one target edge.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub target: Edge,
    pub status: CheckStatus,
    /// e(B_t) >= λ(ν(B_t)+k_t-l_t(r+s)) + l_t(rs-1) at every step.
    pub bt_inequality_ok: bool,
    /// The auxiliary graph on H¹..Hᵐ is connected: l_m = 1 and k_m = 0.
    pub connectivity_ok: bool,
    /// e(F(e)) >= λ(ν(F(e))-2) + 1.
    pub density_ok: bool,
    /// The two constructions of F(target) agree as edge sets: recursive WE
    /// union vs copies minus red edges.
    pub constructions_agree: bool,
    pub violations: Vec<String>,
}

impl LemmaCheck {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the B_t inequality at every step, final connectivity, the witness
/// density corollary, and agreement of the two F(e) constructions. All
/// verdicts use exact rational comparison.
pub fn check_structural_lemmas(
    tr: &RedEdgeTrace,
    map: &WitnessMap,
    pattern: Pattern,
) -> Result<LemmaCheck> {
    let rec = map
        .get(tr.target)
        .ok_or_else(|| Error::Internal(format!("no witness record for {}", tr.target)))?;
    let constructions_agree = tr.witness_graph_edges == rec.witness;

    if !in_proven_range(pattern) {
        return Ok(LemmaCheck {
            target: tr.target,
            status: CheckStatus::OutOfProvenRange,
            bt_inequality_ok: true,
            connectivity_ok: true,
            density_ok: true,
            constructions_agree,
            violations: if constructions_agree {
                vec![]
            } else {
                vec![format!("{}: F(e) constructions disagree", tr.target)]
            },
        });
    }

    let (r, s) = (pattern.r() as i64, pattern.s() as i64);
    let lam = Ratio::new(r * s - 2, r + s - 2);
    let mut violations = Vec::new();

    let mut bt_inequality_ok = true;
    for st in &tr.per_step {
        let lhs = Ratio::from_integer(st.e_bt as i64);
        let rhs = lam * Ratio::from_integer(st.nu_bt as i64 + st.k_t as i64 - st.l_t as i64 * (r + s))
            + Ratio::from_integer(st.l_t as i64 * (r * s - 1));
        if lhs < rhs {
            bt_inequality_ok = false;
            violations.push(format!(
                "{}: B_t inequality fails at t={}: e={} ν={} l={} k={} rhs={}",
                tr.target, st.t, st.e_bt, st.nu_bt, st.l_t, st.k_t, rhs
            ));
        }
    }

    let last = tr.per_step.last().expect("at least one step");
    let connectivity_ok = last.l_t == 1 && last.k_t == 0;
    if !connectivity_ok {
        violations.push(format!(
            "{}: auxiliary graph not connected at m={}: l={} k={}",
            tr.target, last.t, last.l_t, last.k_t
        ));
    }

    let (e_f, nu_f) = (rec.e_f() as i64, rec.nu_f() as i64);
    let density_ok = Ratio::from_integer(e_f) >= lam * Ratio::from_integer(nu_f - 2) + 1;
    if !density_ok {
        violations.push(format!(
            "{}: density corollary fails: e(F)={e_f} ν(F)={nu_f}",
            tr.target
        ));
    }
    if !constructions_agree {
        violations.push(format!("{}: F(e) constructions disagree", tr.target));
    }

    Ok(LemmaCheck {
        target: tr.target,
        status: CheckStatus::Checked,
        bt_inequality_ok,
        connectivity_ok,
        density_ok,
        constructions_agree,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SandwichStatus {
    /// No record reaches size L; nothing to check.
    VacuousPass,
    Pass,
    Fail,
}

/// Outcome of the witness-size sandwich check L <= e(F(f)) <= rs·L.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub l: usize,
    pub status: SandwichStatus,
    /// A qualifying edge and its witness size, when one exists.
    pub witness: Option<(Edge, usize)>,
}

/// If some record has e(F(e)) >= L, there must exist an edge f in the same
/// realization with L <= e(F(f)) <= rs·L.
pub fn check_size_sandwich(map: &WitnessMap, l: usize, pattern: Pattern) -> SandwichReport {
    let rs = pattern.edge_count();
    if !map.iter().any(|rec| rec.e_f() >= l) {
        return SandwichReport {
            l,
            status: SandwichStatus::VacuousPass,
            witness: None,
        };
    }
    let found = map
        .iter()
        .filter(|rec| rec.e_f() >= l && rec.e_f() <= rs * l)
        .min_by_key(|rec| rec.e_f());
    match found {
        Some(rec) => SandwichReport {
            l,
            status: SandwichStatus::Pass,
            witness: Some((rec.edge, rec.e_f())),
        },
        None => SandwichReport {
            l,
            status: SandwichStatus::Fail,
            witness: None,
        },
    }
}

/// Full lemma-check report for one seeded run; this is the JSON-serialized
/// artifact of a tracked closure.
#[derive(Debug, Clone, Serialize)]
pub struct RunLemmaReport {
    pub seed: Option<u64>,
    pub pattern: (usize, usize),
    pub n: usize,
    pub initial_edges: usize,
    pub infected_edges: usize,
    pub percolated: bool,
    pub status: CheckStatus,
    pub checks: Vec<LemmaCheck>,
    pub violations: Vec<String>,
}

impl RunLemmaReport {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs a tracked closure on `g` and checks every infected edge.
pub fn check_run(g: &Graph, pattern: Pattern, seed: Option<u64>) -> Result<RunLemmaReport> {
    let (res, map) = tracked_closure(g, pattern)?;
    let mut checks = Vec::with_capacity(res.trace.len());
    let mut violations = Vec::new();
    for step in &res.trace {
        let tr = red_edge_trace(&map, &res, step.edge)?;
        let check = check_structural_lemmas(&tr, &map, pattern)?;
        violations.extend(check.violations.iter().cloned());
        checks.push(check);
    }
    let status = if in_proven_range(pattern) {
        CheckStatus::Checked
    } else {
        CheckStatus::OutOfProvenRange
    };
    Ok(RunLemmaReport {
        seed,
        pattern: (pattern.r(), pattern.s()),
        n: g.n(),
        initial_edges: g.edge_count(),
        infected_edges: res.trace.len(),
        percolated: res.percolated,
        status,
        checks,
        violations,
    })
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
    fn original_edge_witness_is_itself() {
        let g = Graph::sample_gnp(&GnpSpec::new(8, 0.5, 1).unwrap()).unwrap();
        let map = run_witness_algorithm(&g, pat(2, 2)).unwrap();
        for e in g.edges() {
            let rec = map.get(e).unwrap();
            assert_eq!(rec.e_f(), 1);
            assert_eq!(rec.depth, 0);
            assert!(rec.witness.contains(e));
        }
    }

    #[test]
    fn single_step_witness_is_whole_copy() {
        for (r, s) in [(3, 3), (4, 3), (3, 2)] {
            let n = r + s;
            let e = Edge { u: 0, v: 1 };
            let g = complete_minus(n, e);
            let map = run_witness_algorithm(&g, pat(r, s)).unwrap();
            let rec = map.get(e).unwrap();
            assert_eq!(rec.e_f(), r * s - 1, "pattern ({r},{s})");
            assert_eq!(rec.nu_f(), r + s);
            assert_eq!(rec.depth, 1);
        }
    }

    #[test]
    fn witness_edges_are_original_edges() {
        for seed in 0..20u64 {
            let g = Graph::sample_gnp(&GnpSpec::new(8, 0.45, seed).unwrap()).unwrap();
            let mut original = EdgeSet::new(8);
            for e in g.edges() {
                original.insert(e);
            }
            let map = run_witness_algorithm(&g, pat(2, 3)).unwrap();
            for rec in map.iter() {
                assert!(rec.witness.is_subset(&original), "seed {seed}");
            }
        }
    }

    #[test]
    fn single_step_red_trace_base_case() {
        let e = Edge { u: 1, v: 3 };
        let g = complete_minus(7, e);
        let (res, map) = tracked_closure(&g, pat(3, 3)).unwrap();
        let tr = red_edge_trace(&map, &res, e).unwrap();
        assert_eq!(tr.red_edges, vec![e]);
        assert_eq!(tr.per_step.len(), 1);
        let st = tr.per_step[0];
        assert_eq!((st.e_bt, st.nu_bt, st.l_t, st.k_t), (8, 6, 1, 0));
        let check = check_structural_lemmas(&tr, &map, pat(3, 3)).unwrap();
        assert!(check.all_ok(), "{:?}", check.violations);
    }

    #[test]
    fn red_trace_rejects_original_edge() {
        let e = Edge { u: 0, v: 1 };
        let g = complete_minus(6, e);
        let (res, map) = tracked_closure(&g, pat(3, 3)).unwrap();
        let present = Edge { u: 2, v: 3 };
        assert!(red_edge_trace(&map, &res, present).is_err());
    }

    #[test]
    fn multi_step_constructions_agree() {
        for seed in 0..30u64 {
            let g = Graph::sample_gnp(&GnpSpec::new(10, 0.55, seed).unwrap()).unwrap();
            let (res, map) = tracked_closure(&g, pat(3, 3)).unwrap();
            for step in &res.trace {
                let tr = red_edge_trace(&map, &res, step.edge).unwrap();
                assert_eq!(
                    tr.witness_graph_edges,
                    map.get(step.edge).unwrap().witness,
                    "seed {seed} target {}",
                    step.edge
                );
            }
        }
    }

    #[test]
    fn out_of_range_pattern_skips_checks() {
        // (5,3) violates r <= (s-2)^2 + s = 4.
        let e = Edge { u: 0, v: 1 };
        let g = complete_minus(8, e);
        let (res, map) = tracked_closure(&g, pat(5, 3)).unwrap();
        let tr = red_edge_trace(&map, &res, e).unwrap();
        let check = check_structural_lemmas(&tr, &map, pat(5, 3)).unwrap();
        assert_eq!(check.status, CheckStatus::OutOfProvenRange);
        assert!(check.all_ok());
    }

    #[test]
    fn depth_growth_bound() {
        // e(F(e)) <= (rs-1)·(rs)^(d-1) for an edge at recursion depth d.
        for seed in 0..20u64 {
            let g = Graph::sample_gnp(&GnpSpec::new(10, 0.5, seed).unwrap()).unwrap();
            let map = run_witness_algorithm(&g, pat(3, 3)).unwrap();
            for rec in map.iter() {
                if rec.depth == 0 {
                    assert_eq!(rec.e_f(), 1);
                } else {
                    let bound = 8 * 9usize.pow(rec.depth as u32 - 1);
                    assert!(rec.e_f() <= bound, "seed {seed}: {} at depth {}", rec.e_f(), rec.depth);
                }
            }
        }
    }

    #[test]
    fn size_sandwich_cases() {
        let e = Edge { u: 0, v: 1 };
        let g = complete_minus(6, e);
        let map = run_witness_algorithm(&g, pat(3, 3)).unwrap();
        // L = 1: any witness qualifies
        let rep = check_size_sandwich(&map, 1, pat(3, 3));
        assert_eq!(rep.status, SandwichStatus::Pass);
        // L = rs-1 on a single-step run: the infected edge itself
        let rep = check_size_sandwich(&map, 8, pat(3, 3));
        assert_eq!(rep.status, SandwichStatus::Pass);
        assert_eq!(rep.witness, Some((e, 8)));
        // L above every witness size: vacuous
        let rep = check_size_sandwich(&map, 100, pat(3, 3));
        assert_eq!(rep.status, SandwichStatus::VacuousPass);
    }

    #[test]
    fn check_run_serializes() {
        let e = Edge { u: 0, v: 1 };
        let g = complete_minus(6, e);
        let report = check_run(&g, pat(3, 3), Some(99)).unwrap();
        assert!(report.all_ok());
        assert_eq!(report.infected_edges, 1);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"seed\":99"));
        assert!(json.contains("\"violations\":[]"));
    }
}
