use std::collections::HashMap;

use super::monomials::clique_monomials;
use super::sdp::{Block, BlockEntry, BlockKind, BlockSdp, Equalities, LinearForm};
use crate::error::{Error, Result};
use crate::lifting::{CliqueAssignment, LiftedPop};
use crate::polyrep::{DensePoly, Monomial};
use crate::sparsity::CliqueTree;

/// A moment relaxation together with the monomial behind every `y`.
#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    pub sdp: BlockSdp,
    /// `monomials[i]` is the monomial whose pseudo-moment is `y[i]`.
    pub monomials: Vec<Monomial>,
    /// `y` indices of every bag's moments `y^{(a)}` (degree ≤ 2k monomials
    /// supported on the bag), in first-use order.
    pub clique_y: Vec<Vec<usize>>,
    pub order: usize,
    /// Number of lifting-equality rows (the remaining row is the
    /// normalization `y_1 = 1`).
    pub n_lifting_rows: usize,
}

impl MomentRelaxation {
    pub fn y_of(&self, m: &Monomial) -> Option<usize> {
        self.monomials.iter().position(|x| x == m)
    }

    /// Per-bag moment vectors `y^{(a)}` read from a solution.
    pub fn clique_moments(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.clique_y
            .iter()
            .map(|ids| ids.iter().map(|&i| y[i]).collect())
            .collect()
    }
}

struct ConstraintRef<'a> {
    bag: usize,
    poly: &'a DensePoly,
    label: String,
}

struct Builder {
    index: HashMap<Monomial, usize>,
    monomials: Vec<Monomial>,
}

impl Builder {
    fn y(&mut self, m: Monomial) -> usize {
        if let Some(&i) = self.index.get(&m) {
            return i;
        }
        let i = self.monomials.len();
        self.monomials.push(m.clone());
        self.index.insert(m, i);
        i
    }

    fn form(&mut self, poly: &DensePoly, shift: &Monomial) -> LinearForm {
        let terms = poly
            .terms()
            .map(|(a, c)| (self.y(a.mul(shift)), c))
            .collect();
        LinearForm::from_terms(terms)
    }
}

fn assemble(
    cliques: &[Vec<usize>],
    localizers: &[ConstraintRef<'_>],
    equalities: &[ConstraintRef<'_>],
    objective: &DensePoly,
    k: usize,
    strict_degree: bool,
) -> Result<MomentRelaxation> {
    if k == 0 {
        return Err(Error::OrderTooSmall {
            order: k,
            reason: "order must be at least 1".into(),
        });
    }
    let two_k = 2 * k as u32;
    if objective.degree() > two_k {
        return Err(Error::OrderTooSmall {
            order: k,
            reason: format!("objective has degree {}", objective.degree()),
        });
    }
    for g in localizers {
        if g.poly.degree().div_ceil(2) as usize > k {
            return Err(Error::OrderTooSmall {
                order: k,
                reason: format!(
                    "{} of degree {} cannot be localized",
                    g.label,
                    g.poly.degree()
                ),
            });
        }
    }
    for h in equalities {
        let deg = h.poly.degree();
        if deg > two_k || (strict_degree && deg == two_k) {
            return Err(Error::OrderTooSmall {
                order: k,
                reason: format!("{} of degree {} admits no multiplier", h.label, deg),
            });
        }
    }

    let mut b = Builder {
        index: HashMap::new(),
        monomials: Vec::new(),
    };
    let one = b.y(Monomial::one());
    let mut blocks = Vec::new();
    let mut eqs = Equalities::default();
    eqs.push_row(&LinearForm::single(one), 1.0);
    let mut clique_y = Vec::with_capacity(cliques.len());

    let mut loc_by_bag: Vec<Vec<&ConstraintRef<'_>>> = vec![Vec::new(); cliques.len()];
    for g in localizers {
        loc_by_bag[g.bag].push(g);
    }
    let mut eq_by_bag: Vec<Vec<&ConstraintRef<'_>>> = vec![Vec::new(); cliques.len()];
    for h in equalities {
        eq_by_bag[h.bag].push(h);
    }

    for (a, clique) in cliques.iter().enumerate() {
        let z = clique_monomials(clique, k).elements;
        let mut entries = Vec::with_capacity(z.len() * (z.len() + 1) / 2);
        let mut ids = Vec::new();
        for p in 0..z.len() {
            for q in p..z.len() {
                let y = b.y(z[p].mul(&z[q]));
                ids.push(y);
                entries.push(BlockEntry {
                    row: p,
                    col: q,
                    form: LinearForm::single(y),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        ids.retain(|i| seen.insert(*i));
        clique_y.push(ids);
        blocks.push(Block {
            label: format!("moment[{a}]"),
            size: z.len(),
            kind: BlockKind::Moment,
            entries,
        });

        for g in &loc_by_bag[a] {
            let dj = g.poly.degree().div_ceil(2) as usize;
            let zl = clique_monomials(clique, k - dj).elements;
            let mut entries = Vec::new();
            for p in 0..zl.len() {
                for q in p..zl.len() {
                    let form = b.form(g.poly, &zl[p].mul(&zl[q]));
                    if !form.is_empty() {
                        entries.push(BlockEntry {
                            row: p,
                            col: q,
                            form,
                        });
                    }
                }
            }
            blocks.push(Block {
                label: format!("localizing[{a}]:{}", g.label),
                size: zl.len(),
                kind: BlockKind::Localizing,
                entries,
            });
        }
    }

    let mut n_lifting_rows = 0;
    for (a, clique) in cliques.iter().enumerate() {
        for h in &eq_by_bag[a] {
            let deg = h.poly.degree();
            let budget = if strict_degree {
                two_k - deg - 1
            } else {
                two_k - deg
            };
            for q in clique_monomials(clique, budget as usize).elements {
                let form = b.form(h.poly, &q);
                eqs.push_row(&form, 0.0);
                n_lifting_rows += 1;
            }
        }
    }

    let objective = b.form(objective, &Monomial::one());
    let sdp = BlockSdp {
        y_count: b.monomials.len(),
        blocks,
        equalities: eqs,
        objective,
    };
    Ok(MomentRelaxation {
        sdp,
        monomials: b.monomials,
        clique_y,
        order: k,
        n_lifting_rows,
    })
}

/// Clique-wise moment relaxation of the lifted problem.
///
/// One moment block per bag, one localizing block per assigned inequality,
/// lifting equalities `L(q h) = 0` for every bag monomial `q` with
/// `deg(q h) ≤ 2k` (`< 2k` when `strict_degree`). Moments of monomials
/// supported on a separator are a single shared `y`, which realizes the
/// overlap equalities exactly.
pub fn assemble_lr_moment_sdp(
    pop: &LiftedPop,
    tree: &CliqueTree,
    asg: &CliqueAssignment,
    k: usize,
    strict_degree: bool,
) -> Result<MomentRelaxation> {
    let nb = tree.n_cliques();
    if asg.equality_bag.len() != pop.equalities().len()
        || asg.inequality_bag.len() != pop.inequalities().len()
    {
        return Err(Error::Unassignable(
            "assignment does not match the lifted problem".into(),
        ));
    }
    let covered = |poly: &DensePoly, a: usize| {
        a < nb
            && poly
                .support()
                .iter()
                .all(|v| tree.cliques[a].binary_search(v).is_ok())
    };
    let mut equalities = Vec::new();
    for (e, &a) in pop.equalities().iter().zip(&asg.equality_bag) {
        if !covered(&e.poly, a) {
            return Err(Error::Unassignable(format!(
                "h_{}_{} not inside bag {a}",
                e.l, e.i
            )));
        }
        equalities.push(ConstraintRef {
            bag: a,
            poly: &e.poly,
            label: format!("h_{}_{}", e.l, e.i),
        });
    }
    let mut localizers = Vec::new();
    for (j, (g, &a)) in pop
        .inequalities()
        .iter()
        .zip(&asg.inequality_bag)
        .enumerate()
    {
        if !covered(&g.poly, a) {
            return Err(Error::Unassignable(format!(
                "g_{} not inside bag {a}",
                j + 1
            )));
        }
        localizers.push(ConstraintRef {
            bag: a,
            poly: &g.poly,
            label: format!("g_{}", j + 1),
        });
    }
    // Every objective term t_{l,n} is charged to the bag that owns h_{l,n}.
    assemble(
        &tree.cliques,
        &localizers,
        &equalities,
        pop.objective(),
        k,
        strict_degree,
    )
}

/// Dense moment relaxation of `min f` over the box: a single moment block over
/// all variables plus one localizing block per box constraint.
pub fn assemble_dense_moment_sdp(
    f: &DensePoly,
    box_radius: f64,
    k: usize,
) -> Result<MomentRelaxation> {
    let n = f.n_vars();
    let boxes: Vec<DensePoly> = (0..n)
        .map(|i| {
            let mut g = DensePoly::constant(n, box_radius * box_radius);
            g.add_term(Monomial::var_pow(i, 2), -1.0);
            g
        })
        .collect();
    let localizers: Vec<ConstraintRef<'_>> = boxes
        .iter()
        .enumerate()
        .map(|(i, g)| ConstraintRef {
            bag: 0,
            poly: g,
            label: format!("g_{}", i + 1),
        })
        .collect();
    let clique: Vec<usize> = (0..n).collect();
    assemble(&[clique], &localizers, &[], f, k, false)
}
