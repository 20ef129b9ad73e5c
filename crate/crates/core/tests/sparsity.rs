use std::collections::HashMap;

use lrpop::lifting::{assign_to_cliques, build_lifted_pop};
use lrpop::polyrep::{monomial_instance, rank_two_example};
use lrpop::sparsity::{
    build_lr_graph, chordal_extend, clique_tree, lr_clique_tree, min_degree_order, SparsityGraph,
};

/// Exact treewidth by dynamic programming over vertex subsets:
/// `TW(S) = min_{v∈S} max(TW(S∖v), |Q(S∖v, v)|)` where `Q(S, v)` are the
/// vertices outside `S ∪ {v}` reachable from `v` through `S`.
fn exact_treewidth(g: &SparsityGraph) -> usize {
    let nv = g.n_vertices();
    assert!(nv <= 16);
    let adj: Vec<u32> = (0..nv)
        .map(|v| g.neighbors(v).fold(0u32, |m, u| m | 1 << u))
        .collect();
    let q = |s: u32, v: usize| -> u32 {
        let (mut seen, mut stack, mut out) = (1u32 << v, vec![v], 0u32);
        while let Some(u) = stack.pop() {
            let mut nb = adj[u] & !seen;
            while nb != 0 {
                let w = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                seen |= 1 << w;
                if s >> w & 1 == 1 {
                    stack.push(w);
                } else {
                    out |= 1 << w;
                }
            }
        }
        out.count_ones()
    };
    let full = (1u32 << nv) - 1;
    let mut tw = vec![usize::MAX; 1 << nv];
    tw[0] = 0;
    for s in 1..=full {
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let cand = tw[rest as usize].max(q(rest, v) as usize);
            tw[s as usize] = tw[s as usize].min(cand);
        }
    }
    tw[full as usize]
}

#[test]
fn treewidth_matches_exhaustive_search() {
    for (r, n) in [
        (1, 2),
        (1, 3),
        (1, 5),
        (2, 2),
        (2, 3),
        (2, 4),
        (3, 2),
        (3, 3),
        (1, 7),
    ] {
        let g = build_lr_graph(r, n);
        let tw = exact_treewidth(&g);
        assert_eq!(tw, n.min(r + 1), "r={r} n={n}");
        assert_eq!(
            lr_clique_tree(r, n).max_clique_size(),
            tw + 1,
            "r={r} n={n}"
        );
    }
}

#[test]
fn clique_trees_are_valid_across_the_grid() {
    for r in 1..=8 {
        for n in 2..=12 {
            let g = build_lr_graph(r, n);
            let tree = lr_clique_tree(r, n);
            assert_eq!(tree.max_clique_size(), n.min(r + 1) + 1, "r={r} n={n}");
            assert!(tree.is_tree() && tree.verify_rip() && tree.all_maximal());
            assert!(tree.covers(&g), "r={r} n={n}");
        }
    }
}

#[test]
fn min_degree_heuristic_is_never_narrower() {
    for r in 1..=4 {
        for n in 2..=8 {
            let g = build_lr_graph(r, n);
            let order = min_degree_order(&g);
            let h = chordal_extend(&g, &order).unwrap();
            let tree = clique_tree(&h, &order).unwrap();
            assert!(tree.verify_rip());
            assert!(tree.max_clique_size() >= lr_clique_tree(r, n).max_clique_size());
        }
    }
}

#[test]
fn constraints_are_partitioned_among_bags() {
    let cases = [
        rank_two_example(),
        monomial_instance(6, 3, 3, 1),
        monomial_instance(3, 2, 4, 2),
    ];
    for f in cases {
        for t_bounds in [false, true] {
            let pop = build_lifted_pop(&f, 1.0, t_bounds);
            let tree = lr_clique_tree(f.rank(), f.n());
            let asg = assign_to_cliques(&pop, &tree).unwrap();

            let mut seen: HashMap<usize, usize> = HashMap::new();
            for (a, hs) in asg.h.iter().enumerate() {
                for &e in hs {
                    assert_eq!(asg.equality_bag[e], a);
                    *seen.entry(e).or_default() += 1;
                }
            }
            assert_eq!(seen.len(), pop.equalities().len());
            assert!(seen.values().all(|&c| c == 1));

            let owned: usize = asg.j.iter().map(Vec::len).sum();
            assert_eq!(owned, pop.inequalities().len());
            for (e, eq) in pop.equalities().iter().enumerate() {
                let bag = &tree.cliques[asg.equality_bag[e]];
                assert!(eq.poly.support().iter().all(|v| bag.contains(v)));
            }
            for (k, g) in pop.inequalities().iter().enumerate() {
                let bag = &tree.cliques[asg.inequality_bag[k]];
                assert!(g.poly.support().iter().all(|v| bag.contains(v)));
            }
        }
    }
}
