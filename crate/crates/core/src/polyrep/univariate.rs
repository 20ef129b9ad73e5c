use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient basis of a univariate factor.
///
/// Bernstein coefficients refer to `B_{j,d}(s)` with `s = (x + 1) / 2`, so the
/// basis is native to the interval `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Monomial,
    Bernstein,
}

/// A univariate polynomial of degree `coeffs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    basis: Basis,
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidPolynomial("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn monomial(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(Basis::Monomial, coeffs)
    }

    pub fn bernstein(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(Basis::Bernstein, coeffs)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Nominal degree (trailing zero coefficients are not trimmed).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluate at `x`. Monomial factors use Horner's rule, Bernstein factors
    /// the de Casteljau recurrence at `s = (x + 1) / 2`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.basis {
            Basis::Monomial => horner(&self.coeffs, x),
            Basis::Bernstein => de_casteljau(&self.coeffs, 0.5 * (x + 1.0)),
        }
    }

    /// Re-express the polynomial in `target` basis.
    pub fn to_basis(&self, target: Basis) -> UniPoly {
        let coeffs = match (self.basis, target) {
            (a, b) if a == b => self.coeffs.clone(),
            (Basis::Monomial, Basis::Bernstein) => monomial_to_bernstein(&self.coeffs),
            (Basis::Bernstein, Basis::Monomial) => bernstein_to_monomial(&self.coeffs),
            _ => unreachable!(),
        };
        UniPoly {
            basis: target,
            coeffs,
        }
    }

    /// Monomial coefficients of the derivative.
    pub fn derivative_monomial(&self) -> Vec<f64> {
        let mono = self.to_basis(Basis::Monomial);
        if mono.coeffs.len() == 1 {
            return vec![0.0];
        }
        mono.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * c)
            .collect()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `max |p(x)|` over `[-radius, radius]`: dense sampling plus bisection on
    /// every sign change of the derivative.
    pub fn max_abs_on_interval(&self, radius: f64) -> f64 {
        const SAMPLES: usize = 1024;
        let dp = self.derivative_monomial();
        let xs: Vec<f64> = (0..=SAMPLES)
            .map(|k| -radius + 2.0 * radius * k as f64 / SAMPLES as f64)
            .collect();
        let mut best = self.eval(-radius).abs().max(self.eval(radius).abs());
        let mut prev_x = xs[0];
        let mut prev_d = horner(&dp, prev_x);
        for &x in &xs {
            best = best.max(self.eval(x).abs());
            let d = horner(&dp, x);
            if prev_d == 0.0 {
                best = best.max(self.eval(prev_x).abs());
            } else if prev_d.signum() != d.signum() && d != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                let lo_sign = prev_d.signum();
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if horner(&dp, mid).signum() == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.max(self.eval(0.5 * (lo + hi)).abs());
            }
            prev_x = x;
            prev_d = d;
        }
        best
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn de_casteljau(coeffs: &[f64], s: f64) -> f64 {
    let mut work = coeffs.to_vec();
    let d = work.len() - 1;
    for level in 1..=d {
        for j in 0..=d - level {
            work[j] = (1.0 - s) * work[j] + s * work[j + 1];
        }
    }
    work[0]
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// Power-basis coefficients in s of p(x) with x = 2s - 1.
fn monomial_x_to_power_s(c: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    let mut a = vec![0.0; d + 1];
    for (j, &cj) in c.iter().enumerate() {
        // (2s - 1)^j = Σ_m C(j,m) 2^m s^m (-1)^{j-m}
        for m in 0..=j {
            let sign = if (j - m) % 2 == 0 { 1.0 } else { -1.0 };
            a[m] += cj * binomial(j, m) * 2f64.powi(m as i32) * sign;
        }
    }
    a
}

// Monomial coefficients in x of p(s) with s = (x + 1) / 2.
fn power_s_to_monomial_x(a: &[f64]) -> Vec<f64> {
    let d = a.len() - 1;
    let mut c = vec![0.0; d + 1];
    for (m, &am) in a.iter().enumerate() {
        // ((x + 1) / 2)^m = 2^{-m} Σ_j C(m,j) x^j
        let scale = am / 2f64.powi(m as i32);
        for j in 0..=m {
            c[j] += scale * binomial(m, j);
        }
    }
    c
}

fn monomial_to_bernstein(c: &[f64]) -> Vec<f64> {
    let a = monomial_x_to_power_s(c);
    let d = a.len() - 1;
    (0..=d)
        .map(|i| {
            (0..=i)
                .map(|m| binomial(i, m) / binomial(d, m) * a[m])
                .sum()
        })
        .collect()
}

fn bernstein_to_monomial(b: &[f64]) -> Vec<f64> {
    let d = b.len() - 1;
    let a: Vec<f64> = (0..=d)
        .map(|m| {
            let inner: f64 = (0..=m)
                .map(|i| {
                    let sign = if (m - i) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial(m, i) * b[i]
                })
                .sum();
            binomial(d, m) * inner
        })
        .collect();
    power_s_to_monomial_x(&a)
}
