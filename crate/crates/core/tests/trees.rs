use std::collections::HashSet;

use kimura::group::{slice_patterns, Nucleotide, Pattern};
use kimura::tree::{enumerate_topologies, parse_newick, topology_count, Tree};
use proptest::prelude::*;

fn double_factorial(n: usize) -> u64 {
    // (2n-5)!!
    (1..=2 * n as u64 - 5).step_by(2).product()
}

#[test]
fn topology_counts_are_double_factorials() {
    for n in 3..=7 {
        let all = enumerate_topologies(n).unwrap();
        assert_eq!(all.len() as u64, double_factorial(n));
        assert_eq!(topology_count(n), double_factorial(n));
        let splits: HashSet<Vec<u64>> = all.iter().map(Tree::splits).collect();
        assert_eq!(splits.len(), all.len(), "n={n}: isomorphic duplicates");
    }
}

#[test]
fn edge_assignments_balance_at_every_interior_node() {
    for n in 3..=6 {
        for t in enumerate_topologies(n).unwrap() {
            for p in slice_patterns(n) {
                let x = t.edge_assignment(&p).expect("slice pattern is feasible");
                for leaf in 0..n {
                    let e = t.incident_edges(leaf)[0];
                    assert_eq!(x.get(e), p.get(leaf));
                }
                for &v in t.interior_nodes() {
                    let s: Nucleotide = t.incident_edges(v).iter().map(|&e| x.get(e)).sum();
                    assert_eq!(s, Nucleotide::A, "{t} {p}");
                }
            }
        }
    }
}

#[test]
fn off_slice_patterns_are_infeasible() {
    let t = parse_newick("((1,2),(3,(4,5)));").unwrap();
    for id in 0..1024 {
        let p = Pattern::decode(5, id).unwrap();
        assert_eq!(t.edge_assignment(&p).is_some(), p.on_slice());
    }
}

#[test]
fn collapsing_removes_one_leaf_node_and_two_edges() {
    for n in 4..=7 {
        for t in enumerate_topologies(n).unwrap().iter().take(20) {
            for c in t.find_cherries() {
                let s = t.collapse_cherry(&c).unwrap();
                assert_eq!(s.leaf_count(), n - 1);
                assert_eq!(s.interior_nodes().len(), n - 3);
                assert_eq!(s.edge_count(), t.edge_count() - 2);
                assert!(s.labels().contains(&c.b) && !s.labels().contains(&c.a));
            }
        }
    }
}

#[test]
fn canonical_cherry_of_quartet() {
    let t = parse_newick("((1,2),(3,4));").unwrap();
    let c = t.canonical_cherry();
    assert_eq!((c.a, c.b), (3, 4));
}

proptest! {
    #[test]
    fn newick_round_trip(index in 0usize..105) {
        let t = &enumerate_topologies(6).unwrap()[index];
        let back = parse_newick(&t.to_newick()).unwrap();
        prop_assert_eq!(&back, t);
        prop_assert_eq!(back.splits(), t.splits());
    }

    #[test]
    fn leaf_order_does_not_change_topology(index in 0usize..15, perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let t = &enumerate_topologies(5).unwrap()[index];
        let r = t.with_leaf_order(&perm).unwrap();
        prop_assert_eq!(r.to_newick(), t.to_newick());
        prop_assert_eq!(r.sorted_by_label(), t.clone());
    }
}
