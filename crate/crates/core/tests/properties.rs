//! Algebraic properties of the closure operator, each exercised on 300
//! randomized cases: extensivity, monotonicity, idempotence, and
//! order-independence of the closure set.

use bootperc::closure::{closure_with, CopyChoice};
use bootperc::graph::{Edge, GnpSpec, Graph};
use bootperc::oracles::naive_closure;
use bootperc::{closure, percolates, Pattern};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 300;

fn pat_for(case: usize) -> Pattern {
    let (r, s) = [(2, 2), (2, 3), (3, 3)][case % 3];
    Pattern::new(r, s).unwrap()
}

fn host(case: usize, n_lo: usize, n_hi: usize) -> Graph {
    let seed = 0x5EED_0000 + case as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_lo + (rng.random::<u64>() as usize) % (n_hi - n_lo + 1);
    let p = rng.random::<f64>();
    Graph::sample_gnp(&GnpSpec::new(n, p, seed ^ 0xABCD).unwrap()).unwrap()
}

fn is_subgraph(a: &Graph, b: &Graph) -> bool {
    a.n() == b.n() && a.edges().all(|e| b.has_edge(e))
}

#[test]
fn extensivity() {
    for case in 0..CASES {
        let g = host(case, 4, 16);
        let res = closure(&g, pat_for(case));
        assert!(is_subgraph(&g, &res.final_graph), "case {case}");
    }
}

#[test]
fn monotonicity() {
    for case in 0..CASES {
        let big = host(case, 4, 14);
        // random spanning subgraph of `big`
        let mut rng = ChaCha8Rng::seed_from_u64(0xAB00 ^ case as u64);
        let mut small = Graph::new(big.n());
        for e in big.edges() {
            if rng.random::<f64>() < 0.6 {
                small.add_edge(e).unwrap();
            }
        }
        let pattern = pat_for(case);
        let c_small = closure(&small, pattern).final_graph;
        let c_big = closure(&big, pattern).final_graph;
        assert!(is_subgraph(&c_small, &c_big), "case {case}");
    }
}

#[test]
fn idempotence() {
    for case in 0..CASES {
        let g = host(case, 4, 16);
        let pattern = pat_for(case);
        let once = closure(&g, pattern).final_graph;
        let twice = closure(&once, pattern).final_graph;
        assert_eq!(once, twice, "case {case}");
    }
}

#[test]
fn order_independence_of_closure_set() {
    // Three evaluation orders that share nothing: the incremental worklist
    // with lexicographic copy selection, the same worklist taking the first
    // copy found, and the synchronous full-rescan reference. The closure
    // set must be identical. Relabeling invariance is checked alongside:
    // closure must commute with a vertex permutation.
    for case in 0..CASES {
        let g = host(case, 4, 9);
        let pattern = pat_for(case);
        let lex = closure_with(&g, pattern, CopyChoice::Lexicographic).final_graph;
        let first = closure_with(&g, pattern, CopyChoice::FirstFound).final_graph;
        let rescan = naive_closure(&g, pattern).unwrap();
        assert_eq!(lex, first, "case {case}");
        assert_eq!(lex, rescan, "case {case}");

        let n = g.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37 + case as u64);
        for i in (1..n).rev() {
            let j = (rng.random::<u64>() as usize) % (i + 1);
            perm.swap(i, j);
        }
        let mut relabeled = Graph::new(n);
        for e in g.edges() {
            relabeled
                .add_edge(Edge::new(perm[e.u], perm[e.v]).unwrap())
                .unwrap();
        }
        let closed_relabeled = closure(&relabeled, pattern).final_graph;
        let mut relabeled_closed = Graph::new(n);
        for e in lex.edges() {
            relabeled_closed
                .add_edge(Edge::new(perm[e.u], perm[e.v]).unwrap())
                .unwrap();
        }
        assert_eq!(closed_relabeled, relabeled_closed, "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closure_agrees_with_reference(n in 4usize..=9, p in 0.0f64..1.0, seed in 0u64..1_000_000) {
        let g = Graph::sample_gnp(&GnpSpec::new(n, p, seed).unwrap()).unwrap();
        for (r, s) in [(2, 2), (3, 3)] {
            let pattern = Pattern::new(r, s).unwrap();
            let fast = closure(&g, pattern);
            let slow = naive_closure(&g, pattern).unwrap();
            prop_assert_eq!(&fast.final_graph, &slow);
            prop_assert_eq!(percolates(&g, pattern), slow.is_complete());
        }
    }
}
