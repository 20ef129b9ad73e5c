//! The lifted problem `min Σ_l t_{l,n}` subject to the partial-product
//! equalities and box constraints, and the assignment of its constraints to
//! the bags of a clique tree.

use crate::error::{Error, Result};
use crate::polyrep::{Basis, CpPoly, DensePoly, Monomial};
use crate::sparsity::CliqueTree;

pub use crate::sparsity::LiftedVar;

/// Inflation applied to the partial-product bounds.
pub const T_BOUND_SLACK: f64 = 1e-6;

/// `h_{l,i} = 0` with one-based `(l, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingEquality {
    pub l: usize,
    pub i: usize,
    pub poly: DensePoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InequalityKind {
    /// `R² − x_i² ≥ 0`.
    Box(usize),
    /// `B_{l,i}² − t_{l,i}² ≥ 0`.
    TBound(usize, usize),
    /// User supplied.
    General,
}

/// `poly ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub kind: InequalityKind,
    pub poly: DensePoly,
}

/// Lifted problem over the `n (r + 1)` variables `x_i`, `t_{l,i}`, indexed
/// canonically by [`LiftedVar::index`].
#[derive(Debug, Clone)]
pub struct LiftedPop {
    n: usize,
    r: usize,
    box_radius: f64,
    objective: DensePoly,
    equalities: Vec<LiftingEquality>,
    inequalities: Vec<Inequality>,
    factors: CpPoly,
    scales: Vec<Vec<f64>>,
    t_bounds: Option<Vec<Vec<f64>>>,
}

impl LiftedPop {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn n_lifted_vars(&self) -> usize {
        self.n * (self.r + 1)
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    /// `Σ_l t_{l,n}` as a linear polynomial.
    pub fn objective(&self) -> &DensePoly {
        &self.objective
    }

    pub fn equalities(&self) -> &[LiftingEquality] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Inequality] {
        &self.inequalities
    }

    /// The polynomial as given, in its own basis.
    pub fn factors(&self) -> &CpPoly {
        &self.factors
    }

    /// `c_{l,i}` (zero-based indices): `t_{l,i}` is the partial product
    /// divided by `Π_{k≤i} c_{l,k}`.
    pub fn scales(&self) -> &[Vec<f64>] {
        &self.scales
    }

    /// `B_{l,i}` (zero-based indices) when partial-product bounds are enabled.
    pub fn t_bounds(&self) -> Option<&[Vec<f64>]> {
        self.t_bounds.as_deref()
    }

    pub fn var_index(&self, v: LiftedVar) -> usize {
        v.index(self.n)
    }

    pub fn var_at(&self, idx: usize) -> LiftedVar {
        LiftedVar::from_index(idx, self.n)
    }

    /// Append a general inequality `g ≥ 0` over the lifted variables.
    pub fn add_inequality(&mut self, g: DensePoly) -> Result<()> {
        if g.n_vars() != self.n_lifted_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.n_lifted_vars(),
                got: g.n_vars(),
            });
        }
        self.inequalities.push(Inequality {
            kind: InequalityKind::General,
            poly: g,
        });
        Ok(())
    }

    /// Feasible lifted point for `x`: `t` follows the scaled partial-product
    /// recursion.
    pub fn lift_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut point = vec![0.0; self.n_lifted_vars()];
        point[..self.n].copy_from_slice(x);
        for l in 1..=self.r {
            let mut acc = 1.0;
            for i in 1..=self.n {
                acc *= self.factors.factor(l - 1, i - 1).eval(x[i - 1]) / self.scales[l - 1][i - 1];
                point[LiftedVar::T(l, i).index(self.n)] = acc;
            }
        }
        Ok(point)
    }
}

/// Build the lifted problem of `f` over `[-box_radius, box_radius]^n`.
///
/// Every factor is divided by `c_{l,i} = max_{|x|≤R} |f_{l,i}(x)|`, so the
/// equalities read `t_{l,i} = t_{l,i-1} f_{l,i}(x_i) / c_{l,i}` and the
/// objective is `Σ_l (Π_i c_{l,i}) t_{l,n}`. The relaxation value does not
/// depend on this scaling, but without it moments of large partial products
/// span many orders of magnitude. Bernstein factors are converted to the
/// monomial basis. With `with_t_bounds`, the valid bounds
/// `|t_{l,i}| ≤ B_{l,i} = 1 + ε` are added.
pub fn build_lifted_pop(f: &CpPoly, box_radius: f64, with_t_bounds: bool) -> LiftedPop {
    assert!(
        box_radius > 0.0 && box_radius.is_finite(),
        "box radius must be positive"
    );
    let (n, r) = (f.n(), f.rank());
    let nv = n * (r + 1);
    let mono = f.to_basis(Basis::Monomial);
    let x = |i: usize| LiftedVar::X(i).index(n);
    let t = |l: usize, i: usize| LiftedVar::T(l, i).index(n);
    let scales: Vec<Vec<f64>> = (0..r)
        .map(|l| {
            (0..n)
                .map(|i| {
                    let c = mono.factor(l, i).max_abs_on_interval(box_radius);
                    if c > 0.0 && c.is_finite() {
                        c
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect();

    let mut equalities = Vec::with_capacity(r * n);
    for l in 1..=r {
        for i in 1..=n {
            let mut h = DensePoly::zero(nv);
            h.add_term(Monomial::var(t(l, i)), 1.0);
            let prev = (i > 1).then(|| Monomial::var(t(l, i - 1)));
            let scale = scales[l - 1][i - 1];
            for (j, &c) in mono.factor(l - 1, i - 1).coeffs().iter().enumerate() {
                let xpow = Monomial::var_pow(x(i), j as u32);
                let m = match &prev {
                    Some(p) => p.mul(&xpow),
                    None => xpow,
                };
                h.add_term(m, -c / scale);
            }
            equalities.push(LiftingEquality { l, i, poly: h });
        }
    }

    let r2 = box_radius * box_radius;
    let mut inequalities: Vec<Inequality> = (1..=n)
        .map(|i| {
            let mut g = DensePoly::constant(nv, r2);
            g.add_term(Monomial::var_pow(x(i), 2), -1.0);
            Inequality {
                kind: InequalityKind::Box(i),
                poly: g,
            }
        })
        .collect();

    let t_bounds = with_t_bounds.then(|| vec![vec![1.0 + T_BOUND_SLACK; n]; r]);
    if let Some(bounds) = &t_bounds {
        for l in 1..=r {
            for i in 1..=n {
                let b = bounds[l - 1][i - 1];
                let mut g = DensePoly::constant(nv, b * b);
                g.add_term(Monomial::var_pow(t(l, i), 2), -1.0);
                inequalities.push(Inequality {
                    kind: InequalityKind::TBound(l, i),
                    poly: g,
                });
            }
        }
    }

    let mut objective = DensePoly::zero(nv);
    for l in 1..=r {
        objective.add_term(Monomial::var(t(l, n)), scales[l - 1].iter().product());
    }

    LiftedPop {
        n,
        r,
        box_radius,
        objective,
        equalities,
        inequalities,
        factors: f.clone(),
        scales,
        t_bounds,
    }
}

/// Bag assigned to every constraint. `h[a]` and `j[a]` list the equality and
/// inequality indices owned by bag `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueAssignment {
    pub equality_bag: Vec<usize>,
    pub inequality_bag: Vec<usize>,
    pub h: Vec<Vec<usize>>,
    pub j: Vec<Vec<usize>>,
}

/// Assign each constraint to the lowest-index bag containing all of its
/// variables.
pub fn assign_to_cliques(pop: &LiftedPop, tree: &CliqueTree) -> Result<CliqueAssignment> {
    let bags = tree.vertex_bags();
    let find = |poly: &DensePoly, what: String| -> Result<usize> {
        let support = poly.support();
        let Some(&first) = support.first() else {
            return Ok(0);
        };
        bags.get(&first)
            .and_then(|cands| {
                cands.iter().copied().find(|&a| {
                    support
                        .iter()
                        .all(|v| tree.cliques[a].binary_search(v).is_ok())
                })
            })
            .ok_or(Error::Unassignable(what))
    };

    let equality_bag = pop
        .equalities
        .iter()
        .map(|e| find(&e.poly, format!("h_{}_{}", e.l, e.i)))
        .collect::<Result<Vec<_>>>()?;
    let inequality_bag = pop
        .inequalities
        .iter()
        .enumerate()
        .map(|(k, g)| find(&g.poly, format!("g_{}", k + 1)))
        .collect::<Result<Vec<_>>>()?;

    let mut h = vec![Vec::new(); tree.n_cliques()];
    for (e, &a) in equality_bag.iter().enumerate() {
        h[a].push(e);
    }
    let mut j = vec![Vec::new(); tree.n_cliques()];
    for (g, &a) in inequality_bag.iter().enumerate() {
        j[a].push(g);
    }
    Ok(CliqueAssignment {
        equality_bag,
        inequality_bag,
        h,
        j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyrep::rank_two_example;
    use crate::sparsity::lr_clique_tree;

    #[test]
    fn example_equalities() {
        let f = rank_two_example();
        let pop = build_lifted_pop(&f, 1.0, false);
        assert_eq!(pop.equalities().len(), 10);
        let h11 = &pop.equalities()[0].poly;
        let n = 5;
        assert_eq!(h11.n_terms(), 3);
        assert_eq!(
            h11.coeff_of(&Monomial::var(LiftedVar::T(1, 1).index(n))),
            1.0
        );
        // f_{1,1} = 1 + 2x peaks at 3 on the box.
        assert_eq!(pop.scales()[0][0], 3.0);
        assert_eq!(h11.coeff_of(&Monomial::one()), -1.0 / 3.0);
        assert_eq!(
            h11.coeff_of(&Monomial::var(LiftedVar::X(1).index(n))),
            -2.0 / 3.0
        );
        for e in pop.equalities() {
            let d = f.factor(e.l - 1, e.i - 1).degree();
            let expected = if e.i == 1 { d.max(1) } else { d + 1 };
            assert_eq!(e.poly.degree() as usize, expected);
        }
    }

    #[test]
    fn identity_problem() {
        let f = CpPoly::from_coeffs(Basis::Monomial, vec![vec![vec![0.0, 1.0]]]).unwrap();
        let pop = build_lifted_pop(&f, 1.0, false);
        assert_eq!(pop.equalities().len(), 1);
        let h = &pop.equalities()[0].poly;
        assert_eq!(h.coeff_of(&Monomial::var(1)), 1.0);
        assert_eq!(h.coeff_of(&Monomial::var(0)), -1.0);
        assert_eq!(pop.objective().coeff_of(&Monomial::var(1)), 1.0);
        assert_eq!(pop.inequalities().len(), 1);
    }

    #[test]
    fn scales_use_univariate_maxima() {
        // f_{1,i} = 1 - 2x² peaks at |f| = 1 on the box; f_{2,i} = x + 3 at 4.
        let grid = vec![vec![vec![1.0, 0.0, -2.0]; 2], vec![vec![3.0, 1.0]; 2]];
        let f = CpPoly::from_coeffs(Basis::Monomial, grid).unwrap();
        let pop = build_lifted_pop(&f, 1.0, true);
        assert_eq!(pop.inequalities().len(), 2 + 4);
        for (got, want) in pop.scales().iter().flatten().zip([1.0, 1.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let t = |l| Monomial::var(LiftedVar::T(l, 2).index(2));
        assert!((pop.objective().coeff_of(&t(1)) - 1.0).abs() < 1e-12);
        assert!((pop.objective().coeff_of(&t(2)) - 16.0).abs() < 1e-12);
        let eps = 1.0 + T_BOUND_SLACK;
        assert!(pop.t_bounds().unwrap().iter().flatten().all(|&b| b == eps));
    }

    #[test]
    fn example_assignment_matches_bags() {
        let f = rank_two_example();
        let pop = build_lifted_pop(&f, 1.0, false);
        let tree = lr_clique_tree(2, 5);
        let asg = assign_to_cliques(&pop, &tree).unwrap();
        let n = 5;
        let idx = |v: LiftedVar| v.index(n);
        let e23 = pop
            .equalities()
            .iter()
            .position(|e| e.l == 2 && e.i == 3)
            .unwrap();
        let mut want = vec![
            idx(LiftedVar::X(3)),
            idx(LiftedVar::T(1, 2)),
            idx(LiftedVar::T(2, 2)),
            idx(LiftedVar::T(2, 3)),
        ];
        want.sort_unstable();
        assert_eq!(tree.cliques[asg.equality_bag[e23]], want);
        let mut want = vec![
            idx(LiftedVar::X(1)),
            idx(LiftedVar::T(1, 1)),
            idx(LiftedVar::T(2, 1)),
        ];
        want.sort_unstable();
        assert_eq!(tree.cliques[asg.inequality_bag[0]], want);
    }

    #[test]
    fn uncovered_constraint_is_rejected() {
        let f = rank_two_example();
        let mut pop = build_lifted_pop(&f, 1.0, false);
        let nv = pop.n_lifted_vars();
        let g =
            DensePoly::from_terms(nv, [(Monomial::var(0).mul(&Monomial::var(4)), 1.0)]).unwrap();
        pop.add_inequality(g).unwrap();
        let tree = lr_clique_tree(2, 5);
        assert!(matches!(
            assign_to_cliques(&pop, &tree),
            Err(Error::Unassignable(_))
        ));
    }

    #[test]
    fn recursion_reproduces_objective() {
        let f = rank_two_example();
        let pop = build_lifted_pop(&f, 1.0, false);
        let x = [0.3, -0.7, 0.1, 0.9, -0.2];
        let p = pop.lift_point(&x).unwrap();
        let obj = pop.objective().eval(&p).unwrap();
        assert!((obj - f.eval(&x).unwrap()).abs() < 1e-12);
        for e in pop.equalities() {
            assert!(e.poly.eval(&p).unwrap().abs() < 1e-12);
        }
    }
}
