//! NOMA-versus-OMA decision rules for user 2, the single-round comparison
//! for user 1, and empirical diversity-order fits.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{linear_to_db, SystemConfig, User};

/// Bounds closer than this to an integer are treated as landing on it.
const TIE_TOLERANCE: f64 = 1e-9;

/// `K(T | alpha2, R2) = (2^(T R2) - 1)/alpha2 - 2^(2 T R2) + 1`.
///
/// Negative exactly when NOMA's Erlang argument for user 2 is smaller than
/// OMA's, i.e. NOMA gives user 2 the lower outage at every SNR.
pub fn k_function(t: u32, alpha2: f64, rate2: f64) -> f64 {
    let a = (f64::from(t) * rate2).exp2();
    (a - 1.0) / alpha2 - a * a + 1.0
}

/// The same expression as [`k_function`], read as a function of `alpha2`.
pub fn l_function(alpha2: f64, rate2: f64, t: u32) -> f64 {
    k_function(t, alpha2, rate2)
}

/// `log2((1 - alpha2)/alpha2) / R2`: NOMA beats OMA for user 2 iff `T`
/// exceeds this.
pub fn rounds_bound(alpha2: f64, rate2: f64) -> f64 {
    ((1.0 - alpha2) / alpha2).log2() / rate2
}

/// Smallest `T >= 1` with `T > log2((1-alpha2)/alpha2) / R2` (strict, so a
/// tie with OMA does not count).
pub fn min_rounds(alpha2: f64, rate2: f64) -> u32 {
    let bound = rounds_bound(alpha2, rate2);
    if bound < 1.0 - TIE_TOLERANCE {
        return 1;
    }
    let nearest = bound.round();
    let t = if (bound - nearest).abs() <= TIE_TOLERANCE {
        nearest + 1.0
    } else {
        bound.floor() + 1.0
    };
    t as u32
}

/// Smallest `T >= 1` with `K(T) <= 0`, i.e. NOMA at least ties OMA.
pub fn min_rounds_allowing_tie(alpha2: f64, rate2: f64) -> u32 {
    let bound = rounds_bound(alpha2, rate2);
    if bound <= 1.0 + TIE_TOLERANCE {
        return 1;
    }
    let nearest = bound.round();
    let t = if (bound - nearest).abs() <= TIE_TOLERANCE {
        nearest
    } else {
        bound.ceil()
    };
    t as u32
}

/// Whether `T` rounds put NOMA exactly at the tie with OMA (`K(T) = 0`).
pub fn is_tie(t: u32, alpha2: f64, rate2: f64) -> bool {
    (rounds_bound(alpha2, rate2) - f64::from(t)).abs() <= TIE_TOLERANCE
}

/// Root of `L(alpha2 | R2, T) = 0`: `1 / (2^(T R2) + 1)`. NOMA beats OMA
/// for user 2 iff `alpha2` exceeds it.
pub fn alpha2_threshold(t: u32, rate2: f64) -> f64 {
    1.0 / ((f64::from(t) * rate2).exp2() + 1.0)
}

/// `G(R2) = (2^R2 - 1) / (2^(2 R2) - 1)`, the single-round power threshold.
pub fn g_function(rate2: f64) -> f64 {
    let a = rate2.exp2();
    (a - 1.0) / (a * a - 1.0)
}

/// Supremum of `G` over positive rates, reached as `R2 -> 0`.
pub fn sup_g() -> f64 {
    // G = 1 / (2^R + 1), decreasing; evaluate the simplified form at R = 0.
    1.0 / (0f64.exp2() + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub alpha2: f64,
    pub rate2: f64,
    pub k_values: BTreeMap<u32, f64>,
    /// Strict minimum round count.
    pub t_min: u32,
    /// Minimum round count when a tie with OMA is accepted.
    pub t_min_with_tie: u32,
    /// `alpha2` threshold at `t_min`.
    pub alpha2_threshold: f64,
    pub sup_g: f64,
}

/// Tabulates `K` over `1..=t_max` and the derived thresholds.
pub fn tradeoff_report(alpha2: f64, rate2: f64, t_max: u32) -> Result<TradeoffReport> {
    if !(alpha2 > 0.0 && alpha2 < 1.0) {
        return Err(Error::domain(format!("alpha2 must lie in (0,1), got {alpha2}")));
    }
    if !(rate2 > 0.0) {
        return Err(Error::domain(format!("rate2 must be positive, got {rate2}")));
    }
    let t_min = min_rounds(alpha2, rate2);
    Ok(TradeoffReport {
        alpha2,
        rate2,
        k_values: (1..=t_max).map(|t| (t, k_function(t, alpha2, rate2))).collect(),
        t_min,
        t_min_with_tie: min_rounds_allowing_tie(alpha2, rate2),
        alpha2_threshold: alpha2_threshold(t_min, rate2),
        sup_g: sup_g(),
    })
}

/// User-1 single-round NOMA vs OMA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleRoundComparison {
    /// `beta > 2^R1`.
    pub noma_better: bool,
    pub p_noma: f64,
    pub p_oma: f64,
}

impl SingleRoundComparison {
    /// Ordering of NOMA's outage relative to OMA's.
    pub fn ordering(&self) -> Ordering {
        self.p_noma.total_cmp(&self.p_oma)
    }
}

pub fn single_round_comparison(cfg: &SystemConfig) -> SingleRoundComparison {
    SingleRoundComparison {
        noma_better: cfg.beta() > cfg.rate1().exp2(),
        p_noma: analytic::outage_noma_user1_single_round(cfg),
        p_oma: analytic::outage_oma_single_round(cfg, User::One),
    }
}

/// Least-squares line through `(log10 rho, log10 p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Fitted SNR range in dB.
    pub window: (f64, f64),
    pub points: usize,
}

impl SlopeFit {
    /// Empirical diversity order, `-slope`.
    pub fn order(&self) -> f64 {
        -self.slope
    }
}

/// Fits the log-log outage slope over the points whose SNR (linear in the
/// input, compared in dB) lies inside `window_db`.
pub fn diversity_slope(points: &[(f64, f64)], window_db: (f64, f64)) -> Result<SlopeFit> {
    const EDGE: f64 = 1e-9;
    let selected: Vec<(f64, f64)> = points
        .iter()
        .filter(|(rho, _)| {
            let db = linear_to_db(*rho);
            db >= window_db.0 - EDGE && db <= window_db.1 + EDGE
        })
        .copied()
        .collect();
    if selected.len() < 4 {
        return Err(Error::domain(format!(
            "slope fit needs at least 4 points in [{}, {}] dB, got {}",
            window_db.0,
            window_db.1,
            selected.len()
        )));
    }
    if let Some(&(_, p)) = selected.iter().find(|(_, p)| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::domain(format!(
            "outage probabilities must lie in (0,1), got {p}"
        )));
    }
    let xy: Vec<(f64, f64)> = selected.iter().map(|&(r, p)| (r.log10(), p.log10())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / n;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|v| (v.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let syy: f64 = xy.iter().map(|v| (v.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        window: window_db,
        points: xy.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{db_to_linear, SystemParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn k_examples() {
        assert_relative_eq!(
            k_function(1, 0.3, 0.5),
            (2f64.sqrt() - 1.0) / 0.3 - 1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(k_function(1, 0.3, 0.5), 0.38071, epsilon = 1e-5);
        let k3 = k_function(3, 0.3, 0.5);
        assert_relative_eq!(k3, (1.5f64.exp2() - 1.0) / 0.3 - 7.0, max_relative = 1e-14);
        assert!(k3 < 0.0);
        for (t, r) in [(1, 0.5), (3, 0.2), (4, 1.1)] {
            let a2 = 1.0 / ((f64::from(t) * r).exp2() + 1.0);
            assert!(k_function(t, a2, r).abs() < 1e-12);
        }
    }

    #[test]
    fn min_rounds_examples() {
        assert_eq!(min_rounds(0.3, 0.5), 3);
        assert_eq!(min_rounds(0.6, 0.5), 1);
        assert_eq!(min_rounds(0.6, 7.0), 1);
        assert_eq!(min_rounds(0.5, 0.5), 1);
        assert_eq!(min_rounds(0.2, 0.5), 5);
        assert_eq!(min_rounds_allowing_tie(0.2, 0.5), 4);
        assert_eq!(min_rounds_allowing_tie(0.3, 0.5), 3);
        assert!(is_tie(4, 0.2, 0.5));
        assert_eq!(k_function(4, 0.2, 0.5), 0.0);
    }

    #[test]
    fn threshold_roots() {
        let expected = [0.4142, 0.3333, 0.2612, 0.2000];
        for (t, e) in (1..=4).zip(expected) {
            let root = alpha2_threshold(t, 0.5);
            assert!((root - e).abs() < 5e-5, "T={t}: {root}");
            assert!(l_function(root, 0.5, t).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_g_is_half() {
        assert_eq!(sup_g(), 0.5);
        assert!((g_function(1e-9) - 0.5).abs() < 1e-9);
        assert!(g_function(0.5) < g_function(0.25));
    }

    #[test]
    fn report_invariants() {
        let rep = tradeoff_report(0.3, 0.5, 6).unwrap();
        assert_eq!(rep.t_min, 3);
        assert!(rep.k_values[&rep.t_min] < 0.0);
        assert!((1..rep.t_min).all(|t| rep.k_values[&t] >= 0.0));
        assert!(rep.alpha2_threshold > 0.0 && rep.alpha2_threshold <= 0.5);
        assert!(tradeoff_report(1.2, 0.5, 3).is_err());
    }

    #[test]
    fn single_round_examples() {
        let cfg = SystemConfig::new(SystemParams::fig1(1000.0)).unwrap();
        let c = single_round_comparison(&cfg);
        assert!(c.noma_better);
        assert_eq!(c.ordering(), Ordering::Less);

        let cfg = SystemConfig::new(SystemParams {
            alpha1: 0.51,
            alpha2: 0.49,
            rate1: 1.1,
            ..SystemParams::fig1(1000.0)
        })
        .unwrap();
        let c = single_round_comparison(&cfg);
        assert!(!c.noma_better);
        assert_eq!(c.ordering(), Ordering::Greater);

        // beta = 2^R1 with alpha2 = 1/(r+2).
        let r1: f64 = 0.4;
        let r = r1.exp2() - 1.0;
        let a2 = 1.0 / (r + 2.0);
        let cfg = SystemConfig::new(SystemParams {
            alpha1: 1.0 - a2,
            alpha2: a2,
            rate1: r1,
            ..SystemParams::fig1(1000.0)
        })
        .unwrap();
        let c = single_round_comparison(&cfg);
        assert_relative_eq!(c.p_noma, c.p_oma, max_relative = 1e-12);
    }

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = (6..=10)
            .map(|i| {
                let rho = db_to_linear(5.0 * i as f64);
                (rho, rho.powi(-2) * 1e3)
            })
            .collect();
        let fit = diversity_slope(&pts, (30.0, 50.0)).unwrap();
        assert_relative_eq!(fit.slope, -2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
        assert_eq!(fit.points, 5);
    }

    #[test]
    fn slope_needs_four_points() {
        let pts: Vec<(f64, f64)> = (6..=8).map(|i| (db_to_linear(5.0 * i as f64), 1e-3)).collect();
        assert!(matches!(diversity_slope(&pts, (30.0, 50.0)), Err(Error::Domain(_))));
        let pts: Vec<(f64, f64)> = (6..=10).map(|i| (db_to_linear(5.0 * i as f64), 0.0)).collect();
        assert!(diversity_slope(&pts, (30.0, 50.0)).is_err());
    }

    proptest! {
        #[test]
        fn k_and_l_agree(t in 1u32..10, a in 0.01f64..0.99, r in 0.01f64..3.0) {
            prop_assert_eq!(k_function(t, a, r), l_function(a, r, t));
        }

        #[test]
        fn min_rounds_monotone(a in 0.01f64..0.98, da in 0.0f64..0.01, r in 0.05f64..2.0, dr in 0.0f64..0.5) {
            prop_assert!(min_rounds(a + da, r) <= min_rounds(a, r));
            prop_assert!(min_rounds(a, r + dr) <= min_rounds(a, r));
        }

        #[test]
        fn min_rounds_is_first_negative_k(a in 0.01f64..0.99, r in 0.05f64..2.0) {
            let t = min_rounds(a, r);
            prop_assume!(!is_tie(t, a, r) && (t == 1 || !is_tie(t - 1, a, r)));
            prop_assert!(k_function(t, a, r) < 0.0);
            if t > 1 {
                prop_assert!(k_function(t - 1, a, r) >= 0.0);
            }
        }

        #[test]
        fn threshold_decreasing_and_bounded(t in 1u32..10, r in 0.01f64..3.0) {
            let v = alpha2_threshold(t, r);
            prop_assert!(v > 0.0 && v < 0.5);
            prop_assert!(alpha2_threshold(t + 1, r) < v);
            prop_assert!(alpha2_threshold(t, r * 1.1) < v);
        }

        #[test]
        fn negative_k_means_noma_wins_for_user2(t in 1u32..6, a in 0.05f64..0.49, r in 0.1f64..1.5, db in 0.0f64..60.0) {
            prop_assume!(k_function(t, a, r) < -1e-9);
            let cfg = SystemConfig::new(SystemParams {
                alpha1: 1.0 - a,
                alpha2: a,
                rate2: r,
                ..SystemParams::fig1(db_to_linear(db))
            }).unwrap();
            let noma = analytic::outage_user2_highsnr(&cfg, t).unwrap().probability;
            let oma = analytic::outage_oma(&cfg, User::Two, t).unwrap();
            prop_assert!(noma <= oma);
            if oma > 1e-300 && oma < 1.0 - 1e-12 {
                prop_assert!(noma < oma);
            }
        }
    }
}
