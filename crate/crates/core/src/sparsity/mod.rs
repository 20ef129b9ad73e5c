//! Correlative sparsity of the lifted problem: graph construction, chordal
//! extension and clique trees.

mod elimination;
mod graph;
mod tree;

pub use elimination::{chordal_extend, fill_edges, min_degree_order, peo_order};
pub use graph::{build_lr_graph, LiftedVar, SparsityGraph};
pub use tree::{clique_tree, CliqueTree};

/// Clique tree of the lifted graph for rank `r` and `n` variables, built with
/// the width-optimal elimination ordering.
pub fn lr_clique_tree(r: usize, n: usize) -> CliqueTree {
    let g = build_lr_graph(r, n);
    let order = peo_order(r, n);
    let h = chordal_extend(&g, &order).expect("peo_order is a permutation");
    clique_tree(&h, &order).expect("peo_order is perfect on its own extension")
}

/// Whether `tree` satisfies the running intersection property.
pub fn verify_rip(tree: &CliqueTree) -> bool {
    tree.verify_rip()
}
