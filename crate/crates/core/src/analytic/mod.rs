//! Closed-form and semi-closed-form outage expressions.
//!
//! User 1's accumulated-SINR outage has no elementary closed form. It is
//! evaluated by discretizing the per-round Laplace transform on Chebyshev
//! nodes, expanding its `T`-th power over weak compositions, and inverting
//! each resulting shifted exponential with Gaver-Stehfest, integrated over
//! `(0, r)` by a second Chebyshev rule. User 2 (high SNR) and OMA reduce to
//! Erlang CDFs.

pub mod compositions;
pub mod gamma;
pub mod quadrature;

use std::f64::consts::{LN_2, PI};

pub use compositions::{composition_count, compositions, Composition, Compositions};
pub use gamma::{ln_gamma, regularized_lower_gamma};
pub use quadrature::{chebyshev_nodes, gauss_chebyshev, pairwise_sum, stehfest_weights, QuadratureSpec};

use crate::error::{Error, Result};
use crate::model::{SystemConfig, User};

/// `exp` underflows to zero below this.
const EXP_UNDERFLOW: f64 = -745.0;

/// Default cap on `T * |compositions|` for one evaluation.
pub const DEFAULT_COMPOSITION_BUDGET: u128 = 50_000_000;

fn check_rounds(t_rounds: u32) -> Result<()> {
    if t_rounds == 0 {
        return Err(Error::domain("number of rounds must be at least 1"));
    }
    Ok(())
}

/// CDF of the single-round SINR for user 1's message, observed over `user`'s
/// channel: `1 - exp(-y / (lambda rho (alpha1 - alpha2 y)))` below
/// `beta = alpha1/alpha2`, and 1 from `beta` on.
pub fn cdf_sinr_single(y: f64, cfg: &SystemConfig, user: User) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::domain(format!("SINR must be non-negative, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y >= cfg.beta() {
        return Ok(1.0);
    }
    let denom = cfg.lambda(user) * cfg.rho() * (cfg.alpha1() - cfg.alpha2() * y);
    Ok(-(-y / denom).exp_m1())
}

/// Density matching [`cdf_sinr_single`] on `(0, beta)`.
pub fn pdf_sinr_single(y: f64, cfg: &SystemConfig, user: User) -> f64 {
    if !(y > 0.0) || y >= cfg.beta() {
        return 0.0;
    }
    let lr = cfg.lambda(user) * cfg.rho();
    let gap = cfg.alpha1() - cfg.alpha2() * y;
    cfg.alpha1() / (lr * gap * gap) * (-y / (lr * gap)).exp()
}

/// Precomputed per-node quantities for the user-1 Laplace-domain evaluation.
struct LaplaceKernel {
    /// `ln c`, the common prefactor.
    ln_c: f64,
    /// `ln C(x_n)`.
    ln_kernel: Vec<f64>,
    /// `beta (x_n + 1)`, twice the node's SINR location.
    shift: Vec<f64>,
}

impl LaplaceKernel {
    fn new(cfg: &SystemConfig, quad: &QuadratureSpec) -> Self {
        let (a1, a2) = (cfg.alpha1(), cfg.alpha2());
        let beta = cfg.beta();
        let lr = cfg.lambda1() * cfg.rho();
        let n = quad.n_nodes() as f64;
        let ln_c = (2.0 * a1 * beta * PI / (n * lr)).ln() + 1.0 / (a2 * lr);
        let ln_kernel = quad
            .nodes()
            .iter()
            .map(|&x| {
                let d = 2.0 * a1 - a2 * beta * (x + 1.0);
                0.5 * (1.0 - x * x).ln() - 2.0 * d.ln() - 2.0 * a1 / (a2 * lr * d)
            })
            .collect();
        let shift = quad.nodes().iter().map(|&x| beta * (x + 1.0)).collect();
        LaplaceKernel { ln_c, ln_kernel, shift }
    }
}

/// Laplace transform `E[exp(-s Y)]` of user 1's single-round SINR,
/// approximated by an `N`-node Gauss-Chebyshev rule over `(0, beta)`.
pub fn laplace_sinr_single(s: f64, cfg: &SystemConfig, quad: &QuadratureSpec) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!(
            "transform variable must be non-negative, got {s}"
        )));
    }
    let kernel = LaplaceKernel::new(cfg, quad);
    let terms: Vec<f64> = kernel
        .ln_kernel
        .iter()
        .zip(&kernel.shift)
        .map(|(&lk, &shift)| (kernel.ln_c + lk - s * shift / 2.0).exp())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Gaver-Stehfest inversion of `exp(-s a)` (a unit mass at `a`), integrated
/// over `(0, r)` with a Chebyshev rule in the time variable. Approximates
/// `1` for `a < r` and `0` for `a > r`.
struct StepInversion<'q> {
    weights: &'q [f64],
    /// Per outer node: `(pi ln2 sqrt(1-x^2) / (N (1+x)), 2 ln2 / (r (1+x)))`.
    outer: Vec<(f64, f64)>,
    inner: Vec<f64>,
    per_node: Vec<f64>,
}

impl<'q> StepInversion<'q> {
    fn new(r: f64, quad: &'q QuadratureSpec) -> Self {
        let n = quad.n_nodes() as f64;
        let outer: Vec<(f64, f64)> = quad
            .nodes()
            .iter()
            .map(|&x| {
                let pref = PI * LN_2 * (1.0 - x * x).sqrt() / (n * (1.0 + x));
                (pref, 2.0 * LN_2 / (r * (1.0 + x)))
            })
            .collect();
        StepInversion {
            weights: quad.stehfest_weights(),
            inner: vec![0.0; quad.l_terms()],
            per_node: vec![0.0; outer.len()],
            outer,
        }
    }

    fn mass_below(&mut self, location: f64) -> f64 {
        for (slot, &(pref, scale)) in self.per_node.iter_mut().zip(&self.outer) {
            for (k, (acc, &w)) in self.inner.iter_mut().zip(self.weights).enumerate() {
                let e = -location * (k + 1) as f64 * scale;
                *acc = if e < EXP_UNDERFLOW { 0.0 } else { w * e.exp() };
            }
            *slot = pref * pairwise_sum(&self.inner);
        }
        pairwise_sum(&self.per_node)
    }
}

/// Numerical approximation of `int_0^r delta(y - location) dy` through the
/// same Stehfest + Chebyshev route the user-1 outage uses.
pub fn delta_mass_below(location: f64, r: f64, quad: &QuadratureSpec) -> f64 {
    StepInversion::new(r, quad).mass_below(location)
}

/// Options for [`outage_user1_analytic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Options {
    /// Accumulated-SINR threshold; `None` means `2^(T R1) - 1`.
    pub threshold_override: Option<f64>,
    /// Divide the inverse-transform sum by `r`. That variant does not
    /// integrate to a probability; it exists only for comparison.
    pub literal: bool,
    /// Maximum `T * |compositions|` before refusing.
    pub budget: u128,
}

impl Default for Theorem1Options {
    fn default() -> Self {
        Theorem1Options {
            threshold_override: None,
            literal: false,
            budget: DEFAULT_COMPOSITION_BUDGET,
        }
    }
}

/// Outage probability of user 1 after `t_rounds` chase-combined rounds:
/// `Pr{ sum_t SINR_t <= r }`.
///
/// The result is clamped to `[0, 1]`; it is exactly 1 when `r >= T beta`.
pub fn outage_user1_analytic(
    cfg: &SystemConfig,
    t_rounds: u32,
    quad: &QuadratureSpec,
    opts: Theorem1Options,
) -> Result<f64> {
    check_rounds(t_rounds)?;
    let r = opts
        .threshold_override
        .unwrap_or_else(|| cfg.accumulated_threshold(User::One, t_rounds));
    if !(r > 0.0) {
        return Err(Error::domain(format!("outage threshold must be positive, got {r}")));
    }
    if r >= f64::from(t_rounds) * cfg.beta() {
        return Ok(1.0);
    }

    let n = quad.n_nodes();
    let work = composition_count(t_rounds, n as u32)
        .and_then(|c| c.checked_mul(u128::from(t_rounds)))
        .filter(|&w| w <= opts.budget);
    if work.is_none() {
        return Err(Error::Resource(format!(
            "T = {t_rounds} with N = {n} nodes expands to more than {} composition terms; \
             reduce the node count or the number of rounds",
            opts.budget
        )));
    }

    let kernel = LaplaceKernel::new(cfg, quad);
    let mut step = StepInversion::new(r, quad);
    let t_ln_c = f64::from(t_rounds) * kernel.ln_c;
    let terms: Vec<f64> = compositions(t_rounds, n)
        .map(|comp| {
            let mut ln_weight = t_ln_c + comp.ln_eta();
            let mut shift = 0.0;
            for ((&j, &lk), &sh) in comp.parts().iter().zip(&kernel.ln_kernel).zip(&kernel.shift) {
                if j > 0 {
                    ln_weight += f64::from(j) * lk;
                    shift += f64::from(j) * sh;
                }
            }
            let mut q = step.mass_below(shift / 2.0);
            if opts.literal {
                q /= r;
            }
            ln_weight.exp() * q
        })
        .collect();

    Ok(pairwise_sum(&terms).clamp(0.0, 1.0))
}

/// High-SNR outage of user 2 and whether the SIC rate condition holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrOutage {
    pub probability: f64,
    /// `(1/T) log2(alpha1 T / alpha2 + 1) > R1`: user 1's message can be
    /// cancelled at user 2 once the SNR is large.
    pub valid: bool,
}

/// User 2's outage when SIC is assumed to succeed:
/// `P(T, (2^(T R2) - 1) / (alpha2 lambda2 rho))`.
pub fn outage_user2_highsnr(cfg: &SystemConfig, t_rounds: u32) -> Result<HighSnrOutage> {
    check_rounds(t_rounds)?;
    let t = f64::from(t_rounds);
    let x = cfg.accumulated_threshold(User::Two, t_rounds) / (cfg.alpha2() * cfg.lambda2() * cfg.rho());
    let probability = regularized_lower_gamma(t, x)?;
    let valid = (cfg.alpha1() * t / cfg.alpha2() + 1.0).log2() / t > cfg.rate1();
    Ok(HighSnrOutage { probability, valid })
}

/// Outage of `user` under orthogonal access with chase combining; each user
/// gets half the resource, hence the doubled rate in the threshold.
pub fn outage_oma(cfg: &SystemConfig, user: User, t_rounds: u32) -> Result<f64> {
    check_rounds(t_rounds)?;
    let t = f64::from(t_rounds);
    let x = (2.0 * t * cfg.rate(user)).exp2() - 1.0;
    regularized_lower_gamma(t, x / (cfg.lambda(user) * cfg.rho()))
}

/// Single-round NOMA outage of user 1, `1 - exp(-r1 / ((alpha1 - alpha2 r1) lambda1 rho))`.
pub fn outage_noma_user1_single_round(cfg: &SystemConfig) -> f64 {
    cdf_sinr_single(cfg.single_round_threshold(User::One), cfg, User::One).expect("threshold is positive")
}

/// Single-round OMA outage of `user`, `1 - exp(-(2^(2R) - 1) / (lambda rho))`.
pub fn outage_oma_single_round(cfg: &SystemConfig, user: User) -> f64 {
    let x = (2.0 * cfg.rate(user)).exp2() - 1.0;
    -(-x / (cfg.lambda(user) * cfg.rho())).exp_m1()
}
