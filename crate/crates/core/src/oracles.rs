//! Exhaustive finite verification of the extremal inequalities behind the
//! lower-bound argument, plus a tiny-n dense-subgraph counter.
//!
//! Every verdict here is computed in exact integer or rational arithmetic;
//! floating point never decides a pass or fail. The oracles serve three
//! purposes: regression-testing the rational layer, exhibiting the sharpness
//! of the hypothesis r <= (s-2)^2 + s through explicit failure witnesses,
//! and executing the case analyses behind the proofs. Enumeration caps are
//! hard errors, not silent truncation.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::Error;
use crate::graph::{Edge, Graph};
use crate::pattern::{Pattern, Rational};
use crate::Result;

const INSTANCE_CAP: u64 = 10_000_000;

fn require_rs3(pattern: Pattern) -> Result<()> {
    if pattern.s() < 3 {
        return Err(Error::Domain(format!(
            "overlap oracles require r, s >= 3, got {pattern}"
        )));
    }
    Ok(())
}

fn lambda(pattern: Pattern) -> Rational {
    pattern.lambda()
}

/// Serializable exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Exact {
    pub num: i64,
    pub den: i64,
}

impl From<Rational> for Exact {
    fn from(r: Rational) -> Exact {
        Exact {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

/// Result of sweeping the single-component overlap inequality
/// (P+Q-r-s)·λ + rs-1 - PQ >= 0 over 1 <= P <= r, 1 <= Q <= s,
/// P+Q <= r+s-1 (which includes the boundary pairs (r,s-1) and (r-1,s)).
#[derive(Debug, Clone, Serialize)]
pub struct SingleOverlapReport {
    pub pattern: (usize, usize),
    pub pass: bool,
    pub pairs_checked: usize,
    /// Minimizing (P, Q).
    pub min_at: (usize, usize),
    pub min_value: Exact,
}

pub fn verify_single_overlap(pattern: Pattern) -> Result<SingleOverlapReport> {
    require_rs3(pattern)?;
    let (r, s) = (pattern.r() as i64, pattern.s() as i64);
    let lam = lambda(pattern);
    let mut min: Option<((usize, usize), Rational)> = None;
    let mut checked = 0;
    for p in 1..=r {
        for q in 1..=s {
            if p + q > r + s - 1 {
                continue;
            }
            let value = Ratio::from_integer(p + q - r - s) * lam
                + Ratio::from_integer(r * s - 1 - p * q);
            checked += 1;
            if min.map(|(_, m)| value < m).unwrap_or(true) {
                min = Some(((p as usize, q as usize), value));
            }
        }
    }
    let (min_at, min_value) = min.expect("sweep nonempty");
    Ok(SingleOverlapReport {
        pattern: (pattern.r(), pattern.s()),
        pass: min_value >= Ratio::from_integer(0),
        pairs_checked: checked,
        min_at,
        min_value: min_value.into(),
    })
}

/// One multi-part overlap configuration: the copy meets m components in
/// P_i vertices of the r-side and Q_i of the s-side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapInstance {
    pub m: usize,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}

/// Result of the multi-part optimization sweep
/// Σ P_iQ_i <= λ(Σ(P_i+Q_i) - 2m) + m under P_i,Q_i >= 1, ΣP_i <= r,
/// ΣQ_i <= s, Σ(P_i+Q_i) <= r+s-1.
#[derive(Debug, Clone, Serialize)]
pub struct MultiOverlapReport {
    pub pattern: (usize, usize),
    pub pass: bool,
    pub instances_checked: u64,
    /// Instance with the smallest slack (rhs - lhs).
    pub worst: Option<OverlapInstance>,
    pub min_slack: Option<Exact>,
}

fn compositions(len: usize, each_min: usize, total_max: usize) -> Vec<Vec<usize>> {
    // ordered tuples of `len` integers >= each_min with sum <= total_max
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    fn rec(
        out: &mut Vec<Vec<usize>>,
        cur: &mut Vec<usize>,
        idx: usize,
        remaining: usize,
        each_min: usize,
    ) {
        let len = cur.len();
        if idx == len {
            out.push(cur.clone());
            return;
        }
        let reserve = (len - idx - 1) * each_min;
        if remaining < each_min + reserve {
            return;
        }
        for v in each_min..=(remaining - reserve) {
            cur[idx] = v;
            rec(out, cur, idx + 1, remaining - v, each_min);
        }
    }
    rec(&mut out, &mut cur, 0, total_max, each_min);
    out
}

pub fn verify_multi_overlap(pattern: Pattern, m_max: usize) -> Result<MultiOverlapReport> {
    require_rs3(pattern)?;
    if m_max < 2 {
        return Err(Error::Input(format!("m_max must be >= 2, got {m_max}")));
    }
    let (r, s) = (pattern.r(), pattern.s());
    let lam = lambda(pattern);
    let mut instances = 0u64;
    let mut min_slack: Option<(Rational, OverlapInstance)> = None;
    for m in 2..=m_max.min(r).min(s) {
        let ps = compositions(m, 1, r);
        let qs = compositions(m, 1, s);
        for p in &ps {
            let sum_p: usize = p.iter().sum();
            for q in &qs {
                let sum_q: usize = q.iter().sum();
                if sum_p + sum_q > r + s - 1 {
                    continue;
                }
                instances += 1;
                if instances > INSTANCE_CAP {
                    return Err(Error::Range(format!(
                        "multi-overlap enumeration exceeds cap of {INSTANCE_CAP} instances"
                    )));
                }
                let lhs: i64 = p.iter().zip(q).map(|(&a, &b)| (a * b) as i64).sum();
                let rhs = lam * Ratio::from_integer((sum_p + sum_q) as i64 - 2 * m as i64)
                    + Ratio::from_integer(m as i64);
                let slack = rhs - Ratio::from_integer(lhs);
                if min_slack.as_ref().map(|(w, _)| slack < *w).unwrap_or(true) {
                    min_slack = Some((
                        slack,
                        OverlapInstance {
                            m,
                            p: p.clone(),
                            q: q.clone(),
                        },
                    ));
                }
            }
        }
    }
    let (min, worst) = match min_slack {
        Some((slack, inst)) => (Some(slack), Some(inst)),
        None => (None, None),
    };
    Ok(MultiOverlapReport {
        pattern: (r, s),
        pass: min.map(|m| m >= Ratio::from_integer(0)).unwrap_or(true),
        instances_checked: instances,
        worst,
        min_slack: min.map(Exact::from),
    })
}

/// Per-m summary of the exact-split boundary case ΣP_i = r, ΣQ_i = s.
#[derive(Debug, Clone, Serialize)]
pub struct Case3Row {
    pub m: usize,
    pub instances: u64,
    /// max Σ P_iQ_i over all exact splits.
    pub max_lhs: i64,
    /// The closed-form cap rs - m from the proof.
    pub rs_minus_m: i64,
    /// λ(r+s-2m) + m, the inequality's right-hand side.
    pub rhs: Exact,
    /// max_lhs <= rs - m.
    pub cap_ok: bool,
    /// Every instance satisfies Σ P_iQ_i <= λ(r+s-2m) + m directly.
    pub end_to_end_ok: bool,
}

/// Result of the exact-split boundary sweep. The proof's intermediate chain
/// is recorded per m for inspection; only the end-to-end inequalities are
/// asserted in `pass`.
#[derive(Debug, Clone, Serialize)]
pub struct Case3Report {
    pub pattern: (usize, usize),
    pub pass: bool,
    pub rows: Vec<Case3Row>,
}

pub fn verify_case3_boundary(pattern: Pattern, m_max: usize) -> Result<Case3Report> {
    require_rs3(pattern)?;
    let (r, s) = (pattern.r(), pattern.s());
    let lam = lambda(pattern);
    let mut rows = Vec::new();
    let mut total = 0u64;
    for m in 2..=m_max.min(s) {
        let ps: Vec<Vec<usize>> = compositions(m, 1, r)
            .into_iter()
            .filter(|p| p.iter().sum::<usize>() == r)
            .collect();
        let qs: Vec<Vec<usize>> = compositions(m, 1, s)
            .into_iter()
            .filter(|q| q.iter().sum::<usize>() == s)
            .collect();
        let rhs = lam * Ratio::from_integer((r + s) as i64 - 2 * m as i64)
            + Ratio::from_integer(m as i64);
        let mut max_lhs = i64::MIN;
        let mut end_to_end_ok = true;
        let mut instances = 0u64;
        for p in &ps {
            for q in &qs {
                instances += 1;
                total += 1;
                if total > INSTANCE_CAP {
                    return Err(Error::Range(format!(
                        "case-3 enumeration exceeds cap of {INSTANCE_CAP} instances"
                    )));
                }
                let lhs: i64 = p.iter().zip(q).map(|(&a, &b)| (a * b) as i64).sum();
                max_lhs = max_lhs.max(lhs);
                if Ratio::from_integer(lhs) > rhs {
                    end_to_end_ok = false;
                }
            }
        }
        let rs_minus_m = (r * s) as i64 - m as i64;
        rows.push(Case3Row {
            m,
            instances,
            max_lhs,
            rs_minus_m,
            rhs: rhs.into(),
            cap_ok: max_lhs <= rs_minus_m,
            end_to_end_ok,
        });
    }
    Ok(Case3Report {
        pattern: (r, s),
        pass: rows.iter().all(|row| row.cap_ok && row.end_to_end_ok),
        rows,
    })
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact count of subgraphs F of `g` whose vertex set contains both
/// endpoints of `e`, with exactly `m` edges and m >= λ(ν(F)-2) + 1.
///
/// A subgraph is a vertex subset together with an edge subset inside it; for
/// each admissible vertex set the edge subsets are counted by a binomial.
pub fn count_dense_subgraphs(g: &Graph, e: Edge, pattern: Pattern, m: usize) -> Result<u128> {
    let n = g.n();
    if n > 12 {
        return Err(Error::Range(format!(
            "dense-subgraph enumeration capped at n <= 12, got {n}"
        )));
    }
    if e.v >= n {
        return Err(Error::Input(format!("edge {e} out of range")));
    }
    let (r, s) = (pattern.r() as i64, pattern.s() as i64);
    let required = 1u32 << e.u | 1u32 << e.v;
    let mut count: u128 = 0;
    for mask in 0u32..(1 << n) {
        if mask & required != required {
            continue;
        }
        let nu = mask.count_ones() as i64;
        // density gate: m >= λ(ν-2) + 1, cross-multiplied
        if (m as i64 - 1) * (r + s - 2) < (r * s - 2) * (nu - 2) {
            continue;
        }
        let mut edges_within = 0usize;
        for u in 0..n {
            if mask >> u & 1 == 0 {
                continue;
            }
            for v in g.neighbors(u) {
                if v > u && mask >> v & 1 == 1 {
                    edges_within += 1;
                }
            }
        }
        count += binomial_u128(edges_within, m);
    }
    Ok(count)
}

fn combinations(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    let need = k - cur.len();
    for i in start..=pool.len().saturating_sub(need) {
        cur.push(pool[i]);
        combinations(pool, k, i + 1, cur, out);
        cur.pop();
    }
}

fn all_subsets(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    combinations(pool, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Reference copy detector: does inserting `e` into `g` complete a copy of
/// the pattern that contains `e`?
///
/// Enumerates every placement of the two sides directly and tests all cross
/// edges, with no neighborhood pruning. Exponential in n; guarded to n <= 16
/// so it stays a small-case oracle for the incremental detector.
pub fn naive_completes_copy(g: &Graph, e: Edge, pattern: Pattern) -> Result<bool> {
    let n = g.n();
    if n > 16 {
        return Err(Error::Range(format!(
            "reference copy detection capped at n <= 16, got {n}"
        )));
    }
    if e.v >= n {
        return Err(Error::Input(format!("edge {e} out of range")));
    }
    let rest: Vec<usize> = (0..n).filter(|&w| w != e.u && w != e.v).collect();
    let mut orientations = vec![(pattern.r(), pattern.s())];
    if pattern.r() != pattern.s() {
        orientations.push((pattern.s(), pattern.r()));
    }
    for (a_size, b_size) in orientations {
        if a_size + b_size > n {
            continue;
        }
        for side_a_rest in all_subsets(&rest, a_size - 1) {
            let pool_b: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|w| !side_a_rest.contains(w))
                .collect();
            let mut side_a = side_a_rest.clone();
            side_a.push(e.u);
            'b: for side_b_rest in all_subsets(&pool_b, b_size - 1) {
                let mut side_b = side_b_rest.clone();
                side_b.push(e.v);
                for &a in &side_a {
                    for &b in &side_b {
                        let cross = Edge::new(a, b)?;
                        if cross != e && !g.has_edge(cross) {
                            continue 'b;
                        }
                    }
                }
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Reference closure: synchronous full rescan with no worklist.
///
/// Each round scans every absent edge against a snapshot of the current
/// graph and adds all that complete a copy, repeating to the fixed point.
/// This is the generational definition taken literally, used as an oracle
/// for the incremental engine.
pub fn naive_closure(g: &Graph, pattern: Pattern) -> Result<Graph> {
    let n = g.n();
    let mut current = g.clone();
    loop {
        let mut newly = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let e = Edge::new(u, v)?;
                if !current.has_edge(e) && naive_completes_copy(&current, e, pattern)? {
                    newly.push(e);
                }
            }
        }
        if newly.is_empty() {
            return Ok(current);
        }
        for e in newly {
            current.add_edge(e)?;
        }
    }
}
