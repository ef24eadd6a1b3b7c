//! Log-gamma and the regularized lower incomplete gamma function, which is
//! the Erlang CDF for integer shape.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 1000;
const EPS: f64 = 1e-16;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `P(a, x) = gamma(a, x) / Gamma(a)`.
///
/// Series for `x < a + 1`, Lentz continued fraction for the complement
/// otherwise.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("gamma shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("gamma argument must be non-negative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    let p = if x < a + 1.0 {
        lower_series(a, x, log_prefactor)
    } else {
        1.0 - upper_continued_fraction(a, x, log_prefactor)
    };
    Ok(p.clamp(0.0, 1.0))
}

fn lower_series(a: f64, x: f64, log_prefactor: f64) -> f64 {
    // P = e^{-x} x^a / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * log_prefactor.exp()
}

fn upper_continued_fraction(a: f64, x: f64, log_prefactor: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    log_prefactor.exp() * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_at_integers() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            assert_relative_eq!(ln_gamma(n as f64), fact.ln(), max_relative = 1e-13, epsilon = 1e-14);
            fact *= n as f64;
        }
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), max_relative = 1e-14);
    }

    #[test]
    fn exponential_cdf() {
        for x in [1e-8_f64, 0.01, 0.5, 1.0, 3.0, 20.0] {
            assert_relative_eq!(
                regularized_lower_gamma(1.0, x).unwrap(),
                -(-x).exp_m1(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn integer_shape_closed_form() {
        let expected = 1.0 - 2.0 * (-1.0f64).exp();
        assert_relative_eq!(
            regularized_lower_gamma(2.0, 1.0).unwrap(),
            expected,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected, 0.26424, epsilon = 1e-5);
    }

    #[test]
    fn limits_and_monotonicity() {
        assert_eq!(regularized_lower_gamma(3.0, 0.0).unwrap(), 0.0);
        assert!(regularized_lower_gamma(3.0, 200.0).unwrap() > 1.0 - 1e-15);
        assert_eq!(regularized_lower_gamma(3.0, f64::INFINITY).unwrap(), 1.0);
        let mut prev = 0.0;
        for i in 1..400 {
            let v = regularized_lower_gamma(4.0, i as f64 * 0.05).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(regularized_lower_gamma(0.0, 1.0).is_err());
        assert!(regularized_lower_gamma(1.0, -1.0).is_err());
        assert!(regularized_lower_gamma(1.0, f64::NAN).is_err());
    }

    #[test]
    fn small_argument_keeps_relative_accuracy() {
        // Erlang tail: P(T, x) ~ x^T / T! as x -> 0.
        let x = 1e-6;
        assert_relative_eq!(
            regularized_lower_gamma(3.0, x).unwrap(),
            x.powi(3) / 6.0,
            max_relative = 1e-5
        );
    }
}
