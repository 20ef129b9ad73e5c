use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::elimination::positions;
use super::graph::{LiftedVar, SparsityGraph};
use crate::error::{Error, Result};

/// Maximal cliques of a chordal graph joined into a tree.
///
/// `cliques[a]` is sorted ascending by vertex index. `separators[e]` is the
/// intersection of the two bags joined by `tree_edges[e]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueTree {
    pub cliques: Vec<Vec<usize>>,
    pub tree_edges: Vec<(usize, usize)>,
    pub separators: Vec<Vec<usize>>,
}

impl CliqueTree {
    pub fn n_cliques(&self) -> usize {
        self.cliques.len()
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_separator_size(&self) -> usize {
        self.separators.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// For every vertex, the bags containing it.
    pub fn vertex_bags(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, c) in self.cliques.iter().enumerate() {
            for &v in c {
                map.entry(v).or_default().push(a);
            }
        }
        map
    }

    /// Whether `tree_edges` form a spanning tree over the bags.
    pub fn is_tree(&self) -> bool {
        let n = self.cliques.len();
        if n == 0 {
            return self.tree_edges.is_empty();
        }
        if self.tree_edges.len() != n - 1 {
            return false;
        }
        let mut uf = UnionFind::new(n);
        self.tree_edges
            .iter()
            .all(|&(a, b)| a < n && b < n && uf.union(a, b))
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.cliques.len()];
        for &(a, b) in &self.tree_edges {
            if a < adj.len() && b < adj.len() {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }

    /// Running intersection property: the bags containing any vertex induce a
    /// connected subtree.
    pub fn verify_rip(&self) -> bool {
        let adj = self.adjacency();
        for bags in self.vertex_bags().values() {
            let mut member = vec![false; self.cliques.len()];
            for &a in bags {
                member[a] = true;
            }
            let mut seen = vec![false; self.cliques.len()];
            let mut queue = VecDeque::from([bags[0]]);
            seen[bags[0]] = true;
            let mut reached = 1;
            while let Some(a) = queue.pop_front() {
                for &b in &adj[a] {
                    if member[b] && !seen[b] {
                        seen[b] = true;
                        reached += 1;
                        queue.push_back(b);
                    }
                }
            }
            if reached != bags.len() {
                return false;
            }
        }
        true
    }

    /// No bag is contained in another.
    pub fn all_maximal(&self) -> bool {
        self.cliques.iter().enumerate().all(|(a, ca)| {
            self.cliques
                .iter()
                .enumerate()
                .all(|(b, cb)| a == b || !is_subset(ca, cb))
        })
    }

    /// Every vertex and every edge of `g` lies in some bag.
    pub fn covers(&self, g: &SparsityGraph) -> bool {
        let bags = self.vertex_bags();
        if (0..g.n_vertices()).any(|v| !bags.contains_key(&v)) {
            return false;
        }
        g.edges().iter().all(|&(u, v)| {
            bags[&u]
                .iter()
                .any(|&a| self.cliques[a].binary_search(&v).is_ok())
        })
    }

    /// Graphviz rendering with bag contents as labels.
    pub fn to_dot(&self, vertices: &[LiftedVar]) -> String {
        let mut out = String::from("graph T {\n  node [shape=box];\n");
        for (a, c) in self.cliques.iter().enumerate() {
            let label: Vec<String> = c.iter().map(|&v| vertices[v].to_string()).collect();
            out.push_str(&format!("  c{a} [label=\"{{{}}}\"];\n", label.join(", ")));
        }
        for &(a, b) in &self.tree_edges {
            out.push_str(&format!("  c{a} -- c{b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.len() <= big.len() && small.iter().all(|v| big.binary_search(v).is_ok())
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter()
        .copied()
        .filter(|v| b.binary_search(v).is_ok())
        .collect()
}

/// Maximal cliques of a chordal graph from a perfect elimination ordering,
/// joined by a maximum-weight spanning tree on separator sizes.
///
/// Bags are numbered in elimination order of the vertex that generates them.
pub fn clique_tree(chordal: &SparsityGraph, order: &[usize]) -> Result<CliqueTree> {
    let nv = chordal.n_vertices();
    let pos = positions(nv, order)?;

    let mut candidate: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &v in order {
        let later: Vec<usize> = chordal.neighbors(v).filter(|&u| pos[u] > pos[v]).collect();
        for (k, &a) in later.iter().enumerate() {
            if later[k + 1..].iter().any(|&b| !chordal.has_edge(a, b)) {
                return Err(Error::NotPerfectEliminationOrder(v));
            }
        }
        let mut c = later;
        c.push(v);
        c.sort_unstable();
        candidate[v] = c;
    }

    // A candidate can only be contained in the candidate of an earlier
    // eliminated neighbour.
    let mut cliques = Vec::new();
    for &v in order {
        let dominated = chordal
            .neighbors(v)
            .filter(|&u| pos[u] < pos[v])
            .any(|u| is_subset(&candidate[v], &candidate[u]));
        if !dominated {
            cliques.push(candidate[v].clone());
        }
    }

    let (tree_edges, separators) = spanning_tree(&cliques);
    Ok(CliqueTree {
        cliques,
        tree_edges,
        separators,
    })
}

fn spanning_tree(cliques: &[Vec<usize>]) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
    let n = cliques.len();
    let mut by_vertex: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (a, c) in cliques.iter().enumerate() {
        for &v in c {
            by_vertex.entry(v).or_default().push(a);
        }
    }
    let mut pairs = std::collections::BTreeSet::new();
    for bags in by_vertex.values() {
        for (k, &a) in bags.iter().enumerate() {
            for &b in &bags[k + 1..] {
                pairs.insert((a, b));
            }
        }
    }
    let mut weighted: Vec<(usize, usize, usize)> = pairs
        .into_iter()
        .map(|(a, b)| (intersection(&cliques[a], &cliques[b]).len(), a, b))
        .collect();
    weighted.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut uf = UnionFind::new(n);
    let mut edges = Vec::new();
    for (_, a, b) in weighted {
        if uf.union(a, b) {
            edges.push((a, b));
        }
    }
    // Disconnected graphs: join remaining components with empty separators.
    for a in 1..n {
        if uf.union(0, a) {
            edges.push((0, a));
        }
    }
    let separators = edges
        .iter()
        .map(|&(a, b)| intersection(&cliques[a], &cliques[b]))
        .collect();
    (edges, separators)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
