use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A variable of the lifted problem. Indices are one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LiftedVar {
    /// Original variable `x_i`.
    X(usize),
    /// Partial product `t_{l,i}`.
    T(usize, usize),
}

impl LiftedVar {
    /// Canonical index: `x_1 < … < x_n < t_{1,1} < … < t_{r,n}` row-major.
    pub fn index(self, n: usize) -> usize {
        match self {
            LiftedVar::X(i) => i - 1,
            LiftedVar::T(l, i) => n + (l - 1) * n + (i - 1),
        }
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        if idx < n {
            LiftedVar::X(idx + 1)
        } else {
            let k = idx - n;
            LiftedVar::T(k / n + 1, k % n + 1)
        }
    }

    /// All `n (r + 1)` lifted variables in canonical order.
    pub fn all(r: usize, n: usize) -> Vec<LiftedVar> {
        (0..n * (r + 1)).map(|k| Self::from_index(k, n)).collect()
    }
}

impl fmt::Display for LiftedVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftedVar::X(i) => write!(f, "x_{i}"),
            LiftedVar::T(l, i) => write!(f, "t_{l}_{i}"),
        }
    }
}

/// Undirected simple graph over lifted variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityGraph {
    vertices: Vec<LiftedVar>,
    adj: Vec<BTreeSet<usize>>,
}

impl SparsityGraph {
    pub fn new(vertices: Vec<LiftedVar>) -> Self {
        let adj = vec![BTreeSet::new(); vertices.len()];
        Self { vertices, adj }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[LiftedVar] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> LiftedVar {
        self.vertices[v]
    }

    /// Adds the edge `{u, v}`; self-loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(
            u < self.adj.len() && v < self.adj.len(),
            "edge endpoint out of range"
        );
        if u != v {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Graphviz rendering; vertex labels are `x_i` / `t_l_i`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph G {\n");
        for (v, var) in self.vertices.iter().enumerate() {
            out.push_str(&format!("  v{v} [label=\"{var}\"];\n"));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("  v{u} -- v{v};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Correlative sparsity graph of the lifted problem for rank `r` and `n`
/// variables. Each lifting equality `t_{l,1} = f(x_1)` contributes the edge
/// `{t_{l,1}, x_1}` and each `t_{l,i} = t_{l,i-1} f(x_i)` the triangle
/// `{t_{l,i}, t_{l,i-1}, x_i}`. Box constraints are univariate and add nothing.
pub fn build_lr_graph(r: usize, n: usize) -> SparsityGraph {
    assert!(r >= 1 && n >= 1, "r and n must be positive");
    let mut g = SparsityGraph::new(LiftedVar::all(r, n));
    let x = |i: usize| LiftedVar::X(i).index(n);
    let t = |l: usize, i: usize| LiftedVar::T(l, i).index(n);
    for l in 1..=r {
        g.add_edge(t(l, 1), x(1));
        for i in 2..=n {
            g.add_edge(t(l, i), t(l, i - 1));
            g.add_edge(t(l, i), x(i));
            g.add_edge(t(l, i - 1), x(i));
        }
    }
    g
}
