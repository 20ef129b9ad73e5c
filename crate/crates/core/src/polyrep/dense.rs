use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A monomial stored sparsely as `(variable, exponent)` pairs sorted by
/// variable, with no zero exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: usize) -> Self {
        Monomial(vec![(v as u32, 1)])
    }

    pub fn var_pow(v: usize, e: u32) -> Self {
        if e == 0 {
            Self::one()
        } else {
            Monomial(vec![(v as u32, e)])
        }
    }

    pub fn from_pairs(mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_unstable();
        let mut out: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }

    pub fn from_dense(exps: &[u32]) -> Self {
        Monomial(
            exps.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| (v as u32, e))
                .collect(),
        )
    }

    pub fn to_dense(&self, n: usize) -> Vec<u32> {
        let mut out = vec![0; n];
        for &(v, e) in &self.0 {
            out[v as usize] = e;
        }
        out
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Variables with nonzero exponent, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(v, _)| v as usize)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(v, _)| v as usize)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|&(v, e)| point[v as usize].powi(e as i32))
            .product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if e == 1 {
                write!(f, "v{v}")?;
            } else {
                write!(f, "v{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial in `n` variables as a coefficient map. Zero coefficients are
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePoly {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl DensePoly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (m, c) in terms {
            if let Some(v) = m.max_var() {
                if v >= n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v + 1,
                    });
                }
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    /// Adds `c * m`, dropping the entry if it cancels to zero.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of the monomial with dense exponent vector `exps`.
    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms
            .get(&Monomial::from_dense(exps))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn coeff_of(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Variables appearing in some term, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self.terms.keys().flat_map(|m| m.support()).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: point.len(),
            });
        }
        Ok(self.terms.iter().map(|(m, c)| c * m.eval(point)).sum())
    }

    pub fn mul(&self, other: &DensePoly) -> DensePoly {
        let mut out = DensePoly::zero(self.n.max(other.n));
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }

    pub fn sum_of_coeffs(&self) -> f64 {
        self.terms.values().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_product_merges_exponents() {
        let a = Monomial::from_dense(&[1, 0, 2]);
        let b = Monomial::from_dense(&[0, 3, 1]);
        assert_eq!(a.mul(&b).to_dense(3), vec![1, 3, 3]);
        assert_eq!(a.mul(&b).degree(), 7);
    }

    #[test]
    fn cancellation_removes_entries() {
        let mut p = DensePoly::zero(2);
        p.add_term(Monomial::var(0), 2.0);
        p.add_term(Monomial::var(0), -2.0);
        assert_eq!(p.n_terms(), 0);
    }

    #[test]
    fn out_of_range_variable_rejected() {
        assert!(DensePoly::from_terms(2, [(Monomial::var(2), 1.0)]).is_err());
    }

    #[test]
    fn eval_checks_dimension() {
        let p = DensePoly::constant(3, 1.0);
        assert!(p.eval(&[0.0, 0.0]).is_err());
        assert_eq!(p.eval(&[0.0; 3]).unwrap(), 1.0);
    }
}
