//! Gauss-Chebyshev nodes and Gaver-Stehfest weights.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest Stehfest order that double precision can carry.
pub const MAX_STEHFEST_TERMS: usize = 18;

/// Chebyshev nodes of the first kind, `cos((2i-1) pi / (2n))` for `i = 1..=n`,
/// in strictly decreasing order.
pub fn chebyshev_nodes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("Chebyshev node count must be at least 1"));
    }
    let nodes = (1..=n)
        .map(|i| {
            let x = ((2 * i - 1) as f64 * PI / (2 * n) as f64).cos();
            // cos(pi/2) is 6e-17 in floating point; pin the midpoint node.
            if 2 * i - 1 == n {
                0.0
            } else {
                x
            }
        })
        .collect();
    Ok(nodes)
}

/// Gauss-Chebyshev rule: `int_{-1}^{1} f(x) / sqrt(1-x^2) dx ~ (pi/n) sum f(x_i)`.
pub fn gauss_chebyshev<F: FnMut(f64) -> f64>(nodes: &[f64], mut f: F) -> f64 {
    let terms: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    PI / nodes.len() as f64 * pairwise_sum(&terms)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Gaver-Stehfest weights `w_1..w_L` for even `L` in `[2, 18]`.
///
/// Each weight is accumulated as an exact integer numerator over `(L/2)!`,
/// so the only rounding is the final division.
pub fn stehfest_weights(l: usize) -> Result<Vec<f64>> {
    if l < 2 || !l.is_multiple_of(2) || l > MAX_STEHFEST_TERMS {
        return Err(Error::domain(format!(
            "Stehfest term count must be even and in [2, {MAX_STEHFEST_TERMS}], got {l}"
        )));
    }
    let half = (l / 2) as u128;
    let half_factorial: u128 = (1..=half).product();
    let weights = (1..=l as u128)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let numerator: u128 = (lo..=hi)
                .map(|j| j.pow(half as u32 + 1) * binomial(half, j) * binomial(2 * j, j) * binomial(j, k - j))
                .sum();
            let sign = if (half + k).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * (numerator as f64 / half_factorial as f64)
        })
        .collect();
    Ok(weights)
}

/// Numerical-method parameters shared by the Laplace-domain evaluation: the
/// Chebyshev node count `N` and the Stehfest order `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    n_nodes: usize,
    l_terms: usize,
    nodes: Vec<f64>,
    stehfest_weights: Vec<f64>,
}

impl QuadratureSpec {
    pub const DEFAULT_NODES: usize = 20;
    pub const DEFAULT_TERMS: usize = 10;

    pub fn new(n_nodes: usize, l_terms: usize) -> Result<Self> {
        Ok(QuadratureSpec {
            n_nodes,
            l_terms,
            nodes: chebyshev_nodes(n_nodes)?,
            stehfest_weights: stehfest_weights(l_terms)?,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn l_terms(&self) -> usize {
        self.l_terms
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn stehfest_weights(&self) -> &[f64] {
        &self.stehfest_weights
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::new(Self::DEFAULT_NODES, Self::DEFAULT_TERMS).expect("default spec is valid")
    }
}

/// Pairwise (cascade) summation; the reduction tree depends only on the
/// slice length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn node_examples() {
        assert_eq!(chebyshev_nodes(1).unwrap(), vec![0.0]);
        let two = chebyshev_nodes(2).unwrap();
        assert_relative_eq!(two[0], 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(two[1], -(0.5f64.sqrt()), max_relative = 1e-15);
        assert!(matches!(chebyshev_nodes(0), Err(Error::Domain(_))));
    }

    #[test]
    fn nodes_strictly_decreasing_inside_interval() {
        for n in 1..64 {
            let xs = chebyshev_nodes(n).unwrap();
            assert!(xs.iter().all(|&x| x > -1.0 && x < 1.0));
            assert!(xs.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn chebyshev_rule_integrates_semicircle() {
        // int sqrt(1-x^2) dx = pi/2, written as int (1-x^2)/sqrt(1-x^2) dx.
        for n in 2..40 {
            let xs = chebyshev_nodes(n).unwrap();
            let v = gauss_chebyshev(&xs, |x| 1.0 - x * x);
            assert!((v - PI / 2.0).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn stehfest_small_orders() {
        assert_eq!(stehfest_weights(2).unwrap(), vec![2.0, -2.0]);
        assert_eq!(stehfest_weights(4).unwrap(), vec![-2.0, 26.0, -48.0, 24.0]);
    }

    #[test]
    fn stehfest_rejects_bad_orders() {
        for l in [0, 1, 3, 11, 20] {
            assert!(matches!(stehfest_weights(l), Err(Error::Domain(_))), "l={l}");
        }
        assert!(stehfest_weights(18).is_ok());
    }

    #[test]
    fn stehfest_weights_sum_to_zero() {
        for l in (2..=12).step_by(2) {
            let w = stehfest_weights(l).unwrap();
            let scale: f64 = w.iter().map(|v| v.abs()).sum();
            assert!(pairwise_sum(&w).abs() <= 1e-15 * scale, "L={l}");
        }
    }

    #[test]
    fn stehfest_inverts_unit_step() {
        for l in (2..=12).step_by(2) {
            let w = stehfest_weights(l).unwrap();
            let m1: f64 = w.iter().enumerate().map(|(k, v)| v / (k + 1) as f64).sum();
            assert_relative_eq!(m1, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
