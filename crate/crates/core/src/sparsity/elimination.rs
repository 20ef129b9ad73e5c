use super::graph::{LiftedVar, SparsityGraph};
use crate::error::{Error, Result};

/// Elimination ordering that realizes treewidth `min(n, r + 1)` on the
/// lifted graph, as canonical vertex indices.
///
/// When `r + 1 <= n` the columns are eliminated from `n` down to 1, each as
/// `t_{1,i}, …, t_{r,i}, x_i`. Otherwise each row `t_{l,·}` is eliminated
/// right to left, row by row, with the `x` vertices last.
pub fn peo_order(r: usize, n: usize) -> Vec<usize> {
    assert!(r >= 1 && n >= 1, "r and n must be positive");
    let mut order = Vec::with_capacity(n * (r + 1));
    if r + 1 <= n {
        for i in (1..=n).rev() {
            order.extend((1..=r).map(|l| LiftedVar::T(l, i).index(n)));
            order.push(LiftedVar::X(i).index(n));
        }
    } else {
        for l in 1..=r {
            order.extend((1..=n).rev().map(|i| LiftedVar::T(l, i).index(n)));
        }
        order.extend((1..=n).rev().map(|i| LiftedVar::X(i).index(n)));
    }
    order
}

/// Greedy minimum-degree elimination ordering (ties broken by smallest
/// index). Heuristic only; intended for graphs that are not of the lifted
/// shape.
pub fn min_degree_order(g: &SparsityGraph) -> Vec<usize> {
    let nv = g.n_vertices();
    let mut adj: Vec<std::collections::BTreeSet<usize>> =
        (0..nv).map(|v| g.neighbors(v).collect()).collect();
    let mut alive = vec![true; nv];
    let mut order = Vec::with_capacity(nv);
    for _ in 0..nv {
        let v = (0..nv)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("a live vertex remains");
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for (k, &a) in nb.iter().enumerate() {
            adj[a].remove(&v);
            for &b in &nb[k + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        alive[v] = false;
        order.push(v);
    }
    order
}

/// Position of each vertex in `order`, validating that `order` is a
/// permutation of the graph's vertices.
pub(crate) fn positions(nv: usize, order: &[usize]) -> Result<Vec<usize>> {
    if order.len() != nv {
        return Err(Error::InvalidOrder(format!(
            "order has {} entries for {} vertices",
            order.len(),
            nv
        )));
    }
    let mut pos = vec![usize::MAX; nv];
    for (k, &v) in order.iter().enumerate() {
        if v >= nv {
            return Err(Error::InvalidOrder(format!("vertex {v} out of range")));
        }
        if pos[v] != usize::MAX {
            return Err(Error::InvalidOrder(format!("vertex {v} repeated")));
        }
        pos[v] = k;
    }
    Ok(pos)
}

/// Elimination game: eliminate vertices in `order`, joining the remaining
/// neighbours of each eliminated vertex into a clique. The returned graph is
/// chordal and `order` is a perfect elimination ordering of it.
pub fn chordal_extend(g: &SparsityGraph, order: &[usize]) -> Result<SparsityGraph> {
    let pos = positions(g.n_vertices(), order)?;
    let mut out = g.clone();
    for &v in order {
        let later: Vec<usize> = out.neighbors(v).filter(|&u| pos[u] > pos[v]).collect();
        for (k, &a) in later.iter().enumerate() {
            for &b in &later[k + 1..] {
                out.add_edge(a, b);
            }
        }
    }
    Ok(out)
}

/// Edges present in `extended` but not in `base`.
pub fn fill_edges(base: &SparsityGraph, extended: &SparsityGraph) -> Vec<(usize, usize)> {
    extended
        .edges()
        .into_iter()
        .filter(|&(u, v)| !base.has_edge(u, v))
        .collect()
}
