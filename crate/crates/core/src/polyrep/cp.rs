use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dense::{DensePoly, Monomial};
use super::univariate::{Basis, UniPoly};
use crate::error::{Error, Result};

/// Default cap on the number of products formed by [`CpPoly::expand`].
pub const DEFAULT_EXPANSION_BUDGET: usize = 1_000_000;

/// A rank-`r` polynomial in `n` variables, `f(x) = Σ_l Π_i f_{l,i}(x_i)`.
///
/// All factors share one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CpPoly {
    n: usize,
    r: usize,
    basis: Basis,
    factors: Vec<Vec<UniPoly>>,
}

/// On-disk layout of a [`CpPoly`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpPolyJson {
    pub n: usize,
    pub r: usize,
    pub basis: Basis,
    pub factors: Vec<Vec<Vec<f64>>>,
}

impl CpPoly {
    /// Build from an `r × n` grid of factors.
    pub fn new(factors: Vec<Vec<UniPoly>>) -> Result<Self> {
        let r = factors.len();
        if r == 0 {
            return Err(Error::InvalidPolynomial("rank must be at least 1".into()));
        }
        let n = factors[0].len();
        if n == 0 {
            return Err(Error::InvalidPolynomial(
                "need at least one variable".into(),
            ));
        }
        for row in &factors {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let basis = factors[0][0].basis();
        if factors.iter().flatten().any(|f| f.basis() != basis) {
            return Err(Error::MixedBasis);
        }
        Ok(Self {
            n,
            r,
            basis,
            factors,
        })
    }

    pub fn from_coeffs(basis: Basis, grid: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let factors = grid
            .into_iter()
            .map(|row| row.into_iter().map(|c| UniPoly::new(basis, c)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Self::new(factors)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Factor `f_{l,i}`, zero-based.
    pub fn factor(&self, l: usize, i: usize) -> &UniPoly {
        &self.factors[l][i]
    }

    pub fn factors(&self) -> &[Vec<UniPoly>] {
        &self.factors
    }

    pub fn max_degree(&self) -> usize {
        self.factors
            .iter()
            .flatten()
            .map(UniPoly::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: point.len(),
            });
        }
        Ok(self
            .factors
            .iter()
            .map(|row| {
                row.iter()
                    .zip(point)
                    .map(|(f, &x)| f.eval(x))
                    .product::<f64>()
            })
            .sum())
    }

    pub fn to_basis(&self, target: Basis) -> CpPoly {
        CpPoly {
            n: self.n,
            r: self.r,
            basis: target,
            factors: self
                .factors
                .iter()
                .map(|row| row.iter().map(|f| f.to_basis(target)).collect())
                .collect(),
        }
    }

    /// Expand into a coefficient map. Requires monomial-basis factors.
    pub fn expand(&self) -> Result<DensePoly> {
        self.expand_with_budget(DEFAULT_EXPANSION_BUDGET)
    }

    pub fn expand_with_budget(&self, budget: usize) -> Result<DensePoly> {
        if self.basis != Basis::Monomial {
            return Err(Error::WrongBasis("monomial"));
        }
        let needed: u128 = self
            .factors
            .iter()
            .map(|row| {
                row.iter()
                    .map(|f| f.degree() as u128 + 1)
                    .fold(1u128, |a, b| a.saturating_mul(b))
            })
            .fold(0u128, |a, b| a.saturating_add(b));
        if needed > budget as u128 {
            return Err(Error::ExpansionBudget { needed, budget });
        }
        let mut out = DensePoly::zero(self.n);
        for row in &self.factors {
            let mut partial = DensePoly::constant(self.n, 1.0);
            for (i, f) in row.iter().enumerate() {
                let mut uni = DensePoly::zero(self.n);
                for (j, &c) in f.coeffs().iter().enumerate() {
                    uni.add_term(Monomial::var_pow(i, j as u32), c);
                }
                partial = partial.mul(&uni);
            }
            for (m, c) in partial.terms() {
                out.add_term(m.clone(), c);
            }
        }
        Ok(out)
    }

    /// Coefficient-to-function Lipschitz bound `r n M^{n-1}`, with `M` the
    /// largest Bernstein coefficient magnitude.
    pub fn lipschitz_bound(&self) -> Result<f64> {
        if self.basis != Basis::Bernstein {
            return Err(Error::WrongBasis("Bernstein"));
        }
        let m = self
            .factors
            .iter()
            .flatten()
            .map(UniPoly::max_abs_coeff)
            .fold(0.0, f64::max);
        Ok(self.r as f64 * self.n as f64 * m.powi(self.n as i32 - 1))
    }

    pub fn to_json(&self) -> CpPolyJson {
        CpPolyJson {
            n: self.n,
            r: self.r,
            basis: self.basis,
            factors: self
                .factors
                .iter()
                .map(|row| row.iter().map(|f| f.coeffs().to_vec()).collect())
                .collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: CpPolyJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

impl TryFrom<CpPolyJson> for CpPoly {
    type Error = Error;

    fn try_from(raw: CpPolyJson) -> Result<Self> {
        if raw.factors.len() != raw.r {
            return Err(Error::DimensionMismatch {
                expected: raw.r,
                got: raw.factors.len(),
            });
        }
        if let Some(row) = raw.factors.iter().find(|row| row.len() != raw.n) {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                got: row.len(),
            });
        }
        CpPoly::from_coeffs(raw.basis, raw.factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(c: &[f64]) -> Vec<f64> {
        c.to_vec()
    }

    #[test]
    fn rank_one_product() {
        let f = CpPoly::from_coeffs(
            Basis::Monomial,
            vec![vec![mono(&[0.0, 1.0]), mono(&[0.0, 1.0])]],
        )
        .unwrap();
        assert_eq!(f.eval(&[3.0, 4.0]).unwrap(), 12.0);
        assert!(f.eval(&[1.0]).is_err());
    }

    #[test]
    fn expand_linear_factor() {
        let f = CpPoly::from_coeffs(Basis::Monomial, vec![vec![mono(&[1.0, 1.0])]]).unwrap();
        let p = f.expand().unwrap();
        assert_eq!(p.n_terms(), 2);
        assert_eq!(p.coeff(&[0]), 1.0);
        assert_eq!(p.coeff(&[1]), 1.0);
    }

    #[test]
    fn expand_rejects_bernstein_and_budget() {
        let f = CpPoly::from_coeffs(Basis::Bernstein, vec![vec![mono(&[1.0, 2.0]); 3]]).unwrap();
        assert!(matches!(f.expand(), Err(Error::WrongBasis(_))));
        let g = f.to_basis(Basis::Monomial);
        assert!(matches!(
            g.expand_with_budget(7),
            Err(Error::ExpansionBudget { needed: 8, .. })
        ));
    }

    #[test]
    fn mixed_basis_rejected() {
        let a = UniPoly::monomial(vec![1.0]).unwrap();
        let b = UniPoly::bernstein(vec![1.0]).unwrap();
        assert!(matches!(
            CpPoly::new(vec![vec![a, b]]),
            Err(Error::MixedBasis)
        ));
    }

    #[test]
    fn json_schema_is_strict() {
        let ok = r#"{"n":2,"r":1,"basis":"monomial","factors":[[[1,2],[0,1]]]}"#;
        let f = CpPoly::from_json_str(ok).unwrap();
        assert_eq!(f.eval(&[1.0, 2.0]).unwrap(), 6.0);
        let extra = r#"{"n":2,"r":1,"basis":"monomial","factors":[[[1],[1]]],"x":1}"#;
        assert!(CpPoly::from_json_str(extra).is_err());
        let short = r#"{"n":3,"r":1,"basis":"monomial","factors":[[[1],[1]]]}"#;
        assert!(CpPoly::from_json_str(short).is_err());
        let basis = r#"{"n":1,"r":1,"basis":"chebyshev","factors":[[[1]]]}"#;
        assert!(CpPoly::from_json_str(basis).is_err());
    }

    #[test]
    fn lipschitz_formula() {
        let f = CpPoly::from_coeffs(Basis::Bernstein, vec![vec![mono(&[1.0])]]).unwrap();
        assert_eq!(f.lipschitz_bound().unwrap(), 1.0);
        let g = CpPoly::from_coeffs(Basis::Bernstein, vec![vec![mono(&[1.0, 1.2, 1.1]); 10]; 2])
            .unwrap();
        let expect = 2.0 * 10.0 * 1.2f64.powi(9);
        assert!((g.lipschitz_bound().unwrap() - expect).abs() < 1e-12);
        assert!((expect - 103.2).abs() < 0.05);
        assert!(g.to_basis(Basis::Monomial).lipschitz_bound().is_err());
    }
}
