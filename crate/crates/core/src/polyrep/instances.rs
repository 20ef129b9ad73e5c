//! Seeded instance families.
//!
//! Both generators draw from `ChaCha8Rng`, whose output stream is fixed across
//! platforms, so a `(parameters, seed)` pair always yields the same instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::cp::CpPoly;
use super::univariate::Basis;

/// Random monomial-basis instance: the degree-`k` coefficient of every factor
/// is drawn from `N(0, 0.7^{2k})`, then each factor is scaled so that its
/// coefficients have unit ℓ1 norm.
pub fn monomial_instance(n: usize, d: usize, r: usize, seed: u64) -> CpPoly {
    assert!(n >= 1 && d >= 1 && r >= 1, "n, d and r must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = (0..r)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let mut c: Vec<f64> = (0..=d)
                        .map(|k| {
                            let sd = 0.7f64.powi(k as i32);
                            Normal::new(0.0, sd).unwrap().sample(&mut rng)
                        })
                        .collect();
                    let l1: f64 = c.iter().map(|v| v.abs()).sum();
                    if l1 > 0.0 {
                        c.iter_mut().for_each(|v| *v /= l1);
                    }
                    c
                })
                .collect()
        })
        .collect();
    CpPoly::from_coeffs(Basis::Monomial, grid).expect("generated grid is well formed")
}

/// Bernstein instance with known minimum: `b_{l,i,0} = 1` and every other
/// coefficient uniform in `[1 + δ/n, 1 + 2δ/n]`. Each factor attains its
/// minimum 1 at `x = -1`, so the global minimum over the box is exactly `r`.
pub fn bernstein_instance(n: usize, d: usize, r: usize, delta: f64, seed: u64) -> CpPoly {
    assert!(n >= 1 && r >= 1, "n and r must be positive");
    assert!(delta > 0.0, "delta must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 1.0 + delta / n as f64;
    let hi = 1.0 + 2.0 * delta / n as f64;
    let grid = (0..r)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let mut b = Vec::with_capacity(d + 1);
                    b.push(1.0);
                    for _ in 0..d {
                        b.push(rng.random_range(lo..=hi));
                    }
                    b
                })
                .collect()
        })
        .collect();
    CpPoly::from_coeffs(Basis::Bernstein, grid).expect("generated grid is well formed")
}

/// The rank-2 polynomial in five variables
/// `(1+2x₁)(−2+x₂)(−x₃)(3+x₄)(2−3x₅) + (−1+x₁)(2x₂)(1+3x₃)(−x₄)(1−x₅)`.
pub fn rank_two_example() -> CpPoly {
    let grid = vec![
        vec![
            vec![1.0, 2.0],
            vec![-2.0, 1.0],
            vec![0.0, -1.0],
            vec![3.0, 1.0],
            vec![2.0, -3.0],
        ],
        vec![
            vec![-1.0, 1.0],
            vec![0.0, 2.0],
            vec![1.0, 3.0],
            vec![0.0, -1.0],
            vec![1.0, -1.0],
        ],
    ];
    CpPoly::from_coeffs(Basis::Monomial, grid).expect("fixture is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_instance_is_normalized() {
        let f = monomial_instance(2, 3, 1, 11);
        for row in f.factors() {
            for p in row {
                let l1: f64 = p.coeffs().iter().map(|c| c.abs()).sum();
                assert!((l1 - 1.0).abs() < 1e-12);
                assert_eq!(p.degree(), 3);
            }
        }
    }

    #[test]
    fn monomial_instance_is_deterministic() {
        assert_eq!(monomial_instance(5, 3, 1, 7), monomial_instance(5, 3, 1, 7));
        assert_ne!(monomial_instance(5, 3, 1, 7), monomial_instance(5, 3, 1, 8));
    }

    #[test]
    fn monomial_instance_shape() {
        let f = monomial_instance(3, 2, 4, 1);
        assert_eq!(f.factors().iter().flatten().count(), 12);
        assert!(f.factors().iter().flatten().all(|p| p.degree() == 2));
    }

    #[test]
    fn bernstein_instance_coefficients() {
        let f = bernstein_instance(10, 2, 2, 1.0, 3);
        for p in f.factors().iter().flatten() {
            assert_eq!(p.coeffs()[0], 1.0);
            assert!(p.coeffs()[1..].iter().all(|&b| (1.1..=1.2).contains(&b)));
        }
        assert_eq!(f.eval(&[-1.0; 10]).unwrap(), 2.0);
    }

    #[test]
    fn example_values() {
        let f = rank_two_example();
        assert_eq!(f.eval(&[0.0; 5]).unwrap(), 0.0);
        assert_eq!(f.eval(&[1.0; 5]).unwrap(), -12.0);
    }
}
