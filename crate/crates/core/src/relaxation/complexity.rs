use serde::{Deserialize, Serialize};

use super::assemble::MomentRelaxation;
use super::monomials::clique_monomials;
use super::sdp::BlockKind;
use crate::lifting::LiftedPop;
use crate::polyrep::binomial;
use crate::sparsity::CliqueTree;

/// Size counters of an assembled relaxation next to their a-priori bounds.
///
/// With `w = min(n, r + 1) + 1` the largest bag size:
/// * blocks: `N ≤ n (r + 1)`
/// * block size: `C(w + k, k)`
/// * separator equalities: `(N − 1) · s_h (s_h + 1) / 2` with
///   `s_h = C(w − 1 + k, k)`
/// * lifting equalities: `Σ_{l,i} C(w + 2k − deg h, 2k − deg h)`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub n_blocks: usize,
    pub n_localizing_blocks: usize,
    pub max_block_size: usize,
    pub n_separator_equalities: usize,
    pub n_lifting_equalities: usize,
    pub y_count: usize,
    pub predicted_n_blocks: usize,
    pub predicted_max_block_size: usize,
    pub predicted_separator_equalities: usize,
    pub predicted_lifting_equalities: usize,
}

impl ComplexityReport {
    /// `n_separator_equalities` counts the distinct separator monomials of
    /// degree ≤ 2k per tree edge, i.e. the equalities that shared variables
    /// replace.
    pub fn new(
        tree: &CliqueTree,
        pop: &LiftedPop,
        rel: &MomentRelaxation,
        strict_degree: bool,
    ) -> Self {
        let k = rel.order;
        let (n, r) = (pop.n(), pop.rank());
        let width = n.min(r + 1) + 1;

        let n_blocks = rel
            .sdp
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Moment)
            .count();
        let n_localizing_blocks = rel.sdp.blocks.len() - n_blocks;
        let max_block_size = rel
            .sdp
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Moment)
            .map(|b| b.size)
            .max()
            .unwrap_or(0);
        let n_separator_equalities = tree
            .separators
            .iter()
            .map(|s| clique_monomials(s, 2 * k).len())
            .sum();

        let s_h = binomial(width - 1 + k, k) as usize;
        let predicted_separator_equalities =
            tree.n_cliques().saturating_sub(1) * s_h * (s_h + 1) / 2;
        let predicted_lifting_equalities = pop
            .equalities()
            .iter()
            .map(|e| {
                let deg = e.poly.degree() as usize;
                let room = (2 * k).saturating_sub(deg + usize::from(strict_degree));
                binomial(width + room, room) as usize
            })
            .sum();

        ComplexityReport {
            n_blocks,
            n_localizing_blocks,
            max_block_size,
            n_separator_equalities,
            n_lifting_equalities: rel.n_lifting_rows,
            y_count: rel.sdp.y_count,
            predicted_n_blocks: n * (r + 1),
            predicted_max_block_size: binomial(width + k, k) as usize,
            predicted_separator_equalities,
            predicted_lifting_equalities,
        }
    }

    /// All four counters are within their bounds.
    pub fn within_bounds(&self) -> bool {
        self.n_blocks <= self.predicted_n_blocks
            && self.max_block_size <= self.predicted_max_block_size
            && self.n_separator_equalities <= self.predicted_separator_equalities
            && self.n_lifting_equalities <= self.predicted_lifting_equalities
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{assign_to_cliques, build_lifted_pop};
    use crate::polyrep::{bernstein_instance, monomial_instance, CpPoly};
    use crate::relaxation::assemble_lr_moment_sdp;
    use crate::sparsity::lr_clique_tree;

    fn report(f: &CpPoly, k: usize) -> ComplexityReport {
        let pop = build_lifted_pop(f, 1.0, false);
        let tree = lr_clique_tree(f.rank(), f.n());
        let asg = assign_to_cliques(&pop, &tree).unwrap();
        let rel = assemble_lr_moment_sdp(&pop, &tree, &asg, k, false).unwrap();
        ComplexityReport::new(&tree, &pop, &rel, false)
    }

    #[test]
    fn rank_two_linear_factors() {
        let rep = report(&monomial_instance(5, 1, 2, 0), 2);
        assert!(rep.max_block_size <= 15);
        assert_eq!(rep.predicted_max_block_size, 15);
        assert!(rep.within_bounds());
    }

    #[test]
    fn separator_bound() {
        let rep = report(&bernstein_instance(12, 2, 2, 1.0, 0), 2);
        assert_eq!(
            rep.predicted_separator_equalities,
            (rep.n_blocks - 1) * 10 * 11 / 2
        );
        assert!(rep.within_bounds());
    }

    #[test]
    fn single_clique_has_no_separators() {
        let rep = report(&monomial_instance(1, 1, 1, 0), 1);
        assert_eq!(rep.n_blocks, 1);
        assert_eq!(rep.n_separator_equalities, 0);
        assert_eq!(rep.predicted_separator_equalities, 0);
    }
}
