//! Weak compositions of `t` into `n` ordered parts, with their multinomial
//! coefficients. These index the expansion of `(p_1 + ... + p_n)^t`.

use super::gamma::ln_gamma;

/// One weak composition `(j_1, ..., j_n)` of `t` and its multinomial
/// coefficient `t! / prod j_i!`.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    parts: Vec<u32>,
    eta: f64,
    ln_eta: f64,
}

impl Composition {
    fn new(parts: Vec<u32>) -> Self {
        let (eta, ln_eta) = multinomial(&parts);
        Composition { parts, eta, ln_eta }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Multinomial coefficient. Exact whenever it fits in 53 bits; may be
    /// `inf` for very large totals, in which case use [`Self::ln_eta`].
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn ln_eta(&self) -> f64 {
        self.ln_eta
    }

    pub fn total(&self) -> u32 {
        self.parts.iter().sum()
    }
}

/// Computes the multinomial coefficient as a product of binomials in exact
/// integer arithmetic, falling back to log-gamma on overflow.
fn multinomial(parts: &[u32]) -> (f64, f64) {
    let mut acc: Option<u128> = Some(1);
    let mut running: u128 = 0;
    for &j in parts {
        for i in 1..=u128::from(j) {
            running += 1;
            // acc * running / i stays integral: it is C(running, i) times the
            // previous product.
            acc = acc.and_then(|a| a.checked_mul(running)).map(|a| a / i);
        }
    }
    match acc {
        Some(v) => {
            let eta = v as f64;
            (eta, eta.ln())
        }
        None => {
            let total: u32 = parts.iter().sum();
            let ln_eta =
                ln_gamma(f64::from(total) + 1.0) - parts.iter().map(|&j| ln_gamma(f64::from(j) + 1.0)).sum::<f64>();
            (ln_eta.exp(), ln_eta)
        }
    }
}

/// Number of weak compositions of `t` into `n` parts, `C(t+n-1, n-1)`, or
/// `None` if it does not fit in a `u128`.
pub fn composition_count(t: u32, n: u32) -> Option<u128> {
    if n == 0 {
        return Some(u128::from(t == 0));
    }
    let top = u128::from(t) + u128::from(n) - 1;
    let k = u128::from(n - 1).min(u128::from(t));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(top - i)? / (i + 1);
    }
    Some(acc)
}

/// Iterator over all weak compositions of `t` into `n` parts in decreasing
/// lexicographic order: `(t,0,..,0)` first, `(0,..,0,t)` last.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u32>>,
}

pub fn compositions(t: u32, n: usize) -> Compositions {
    let current = if n == 0 {
        None
    } else {
        let mut first = vec![0; n];
        first[0] = t;
        Some(first)
    };
    Compositions { current }
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        let parts = self.current.take()?;
        let n = parts.len();
        // Successor: move one unit out of the last non-zero part before the
        // tail, and collect the whole tail into the next slot.
        if let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| parts[i] > 0) {
            let mut next = parts.clone();
            let tail: u32 = next[i + 1..].iter().sum();
            next[i] -= 1;
            next[i + 1..].iter_mut().for_each(|v| *v = 0);
            next[i + 1] = tail + 1;
            self.current = Some(next);
        }
        Some(Composition::new(parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn collect(t: u32, n: usize) -> Vec<(Vec<u32>, f64)> {
        compositions(t, n).map(|c| (c.parts().to_vec(), c.eta())).collect()
    }

    #[test]
    fn binomial_square() {
        assert_eq!(
            collect(2, 2),
            vec![(vec![2, 0], 1.0), (vec![1, 1], 2.0), (vec![0, 2], 1.0)]
        );
    }

    #[test]
    fn single_unit_into_three() {
        assert_eq!(
            collect(1, 3),
            vec![(vec![1, 0, 0], 1.0), (vec![0, 1, 0], 1.0), (vec![0, 0, 1], 1.0)]
        );
    }

    #[test]
    fn degenerate_shapes() {
        assert_eq!(collect(5, 1), vec![(vec![5], 1.0)]);
        assert_eq!(collect(0, 3), vec![(vec![0, 0, 0], 1.0)]);
        assert!(collect(3, 0).is_empty());
    }

    #[test]
    fn count_t4_n20() {
        let all: Vec<_> = compositions(4, 20).collect();
        assert_eq!(all.len(), 8855);
        assert_eq!(composition_count(4, 20), Some(8855));
        // p_n = n/20, sum p = 10.5
        let p: Vec<f64> = (1..=20).map(|n| n as f64 / 20.0).collect();
        let total: f64 = all
            .iter()
            .map(|c| {
                c.eta()
                    * c.parts()
                        .iter()
                        .zip(&p)
                        .map(|(&j, &pn)| pn.powi(j as i32))
                        .product::<f64>()
            })
            .sum();
        assert_relative_eq!(total, 10.5f64.powi(4), max_relative = 1e-10);
    }

    #[test]
    fn eta_exact_for_moderate_totals() {
        // 8! / (3! 3! 2!) = 560
        let c = Composition::new(vec![3, 0, 3, 2]);
        assert_eq!(c.eta(), 560.0);
        assert_relative_eq!(c.ln_eta(), 560f64.ln(), max_relative = 1e-15);
        // 40! exceeds u128, forcing the log-gamma path.
        let c = Composition::new(vec![1; 40]);
        assert_relative_eq!(c.ln_eta(), ln_gamma(41.0), max_relative = 1e-13);
    }

    proptest! {
        #[test]
        fn enumerates_each_composition_once_in_order(t in 0u32..7, n in 1usize..6) {
            let all: Vec<Vec<u32>> = compositions(t, n).map(|c| c.parts().to_vec()).collect();
            prop_assert_eq!(all.len() as u128, composition_count(t, n as u32).unwrap());
            prop_assert!(all.iter().all(|p| p.iter().sum::<u32>() == t && p.len() == n));
            prop_assert!(all.windows(2).all(|w| w[0] > w[1]));
        }
    }
}
