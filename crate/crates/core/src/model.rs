//! Physical parameterization of the two-user downlink and the per-round
//! SINR maps shared by the analytic and Monte Carlo engines.
//!
//! User 1 is the far user (more power, treats user 2 as noise); user 2 is the
//! near user and runs SIC, decoding user 1's message before its own.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// Mean channel gain `1 / (1 + d^zeta)` for a link of length `d`.
///
/// A zero exponent is accepted (`d^0 = 1`, so the mean is 1/2).
pub fn pathloss_mean(d: f64, zeta: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("distance must be positive, got {d}")));
    }
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(Error::domain(format!(
            "path loss exponent must be non-negative, got {zeta}"
        )));
    }
    Ok(1.0 / (1.0 + d.powf(zeta)))
}

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// One of the two NOMA users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum User {
    /// Far user, larger power share.
    One,
    /// Near user, performs SIC.
    Two,
}

impl User {
    pub fn index(self) -> usize {
        match self {
            User::One => 1,
            User::Two => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(User::One),
            2 => Ok(User::Two),
            _ => Err(Error::domain(format!("user index must be 1 or 2, got {i}"))),
        }
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl FromStr for User {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let i: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("user must be 1 or 2, got {s:?}")))?;
        User::from_index(i)
    }
}

/// Raw physical parameters, before validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Transmit SNR `P / sigma^2`, linear.
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
    pub zeta: f64,
    pub rate1: f64,
    pub rate2: f64,
}

impl SystemParams {
    /// Power split 0.7/0.3, distances 7 m and 3 m, exponent 3, rates 0.2 and
    /// 0.8 bit/s/Hz, at the given linear SNR.
    pub fn fig1(rho: f64) -> Self {
        SystemParams {
            alpha1: 0.7,
            alpha2: 0.3,
            rho,
            d1: 7.0,
            d2: 3.0,
            zeta: 3.0,
            rate1: 0.2,
            rate2: 0.8,
        }
    }

    /// Retransmission-sweep defaults: rates 0.3 and 0.5 bit/s/Hz at 35 dB.
    pub fn fig2(alpha2: f64) -> Self {
        SystemParams {
            alpha1: 1.0 - alpha2,
            alpha2,
            rho: db_to_linear(35.0),
            d1: 7.0,
            d2: 3.0,
            zeta: 3.0,
            rate1: 0.3,
            rate2: 0.5,
        }
    }
}

/// Validated parameter set of the two-user link. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    alpha1: f64,
    alpha2: f64,
    rho: f64,
    d1: f64,
    d2: f64,
    zeta: f64,
    rate1: f64,
    rate2: f64,
    lambda1: f64,
    lambda2: f64,
}

impl SystemConfig {
    pub fn new(p: SystemParams) -> Result<Self> {
        let SystemParams {
            alpha1,
            alpha2,
            rho,
            d1,
            d2,
            zeta,
            rate1,
            rate2,
        } = p;
        for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::validation(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if (alpha1 + alpha2 - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation(format!(
                "alpha1 + alpha2 must equal 1, got {}",
                alpha1 + alpha2
            )));
        }
        if alpha1 <= alpha2 {
            return Err(Error::validation(format!(
                "user 1 must receive more power: alpha1 = {alpha1} <= alpha2 = {alpha2}"
            )));
        }
        for (name, v) in [
            ("rho", rho),
            ("d1", d1),
            ("d2", d2),
            ("zeta", zeta),
            ("rate1", rate1),
            ("rate2", rate2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if d1 < d2 {
            return Err(Error::validation(format!(
                "user 1 must be the far user: d1 = {d1} < d2 = {d2}"
            )));
        }
        let lambda1 = pathloss_mean(d1, zeta)?;
        let lambda2 = pathloss_mean(d2, zeta)?;
        Ok(SystemConfig {
            alpha1,
            alpha2,
            rho,
            d1,
            d2,
            zeta,
            rate1,
            rate2,
            lambda1,
            lambda2,
        })
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            rho: self.rho,
            d1: self.d1,
            d2: self.d2,
            zeta: self.zeta,
            rate1: self.rate1,
            rate2: self.rate2,
        }
    }

    /// Same link at a different linear SNR.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        SystemConfig::new(SystemParams { rho, ..self.params() })
    }

    /// Same link with power split `(1 - alpha2, alpha2)`.
    pub fn with_alpha2(&self, alpha2: f64) -> Result<Self> {
        SystemConfig::new(SystemParams {
            alpha1: 1.0 - alpha2,
            alpha2,
            ..self.params()
        })
    }

    pub fn with_rates(&self, rate1: f64, rate2: f64) -> Result<Self> {
        SystemConfig::new(SystemParams {
            rate1,
            rate2,
            ..self.params()
        })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_db(&self) -> f64 {
        linear_to_db(self.rho)
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn rate1(&self) -> f64 {
        self.rate1
    }

    pub fn rate2(&self) -> f64 {
        self.rate2
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Power ratio `alpha1 / alpha2`, the supremum of any per-round SINR for
    /// user 1's message.
    pub fn beta(&self) -> f64 {
        self.alpha1 / self.alpha2
    }

    pub fn rate(&self, user: User) -> f64 {
        match user {
            User::One => self.rate1,
            User::Two => self.rate2,
        }
    }

    pub fn lambda(&self, user: User) -> f64 {
        match user {
            User::One => self.lambda1,
            User::Two => self.lambda2,
        }
    }

    /// Single-round SINR threshold `2^R - 1`.
    pub fn single_round_threshold(&self, user: User) -> f64 {
        self.rate(user).exp2() - 1.0
    }

    /// Threshold `2^(T R) - 1` that the SINR accumulated over `t_rounds`
    /// rounds must exceed.
    pub fn accumulated_threshold(&self, user: User, t_rounds: u32) -> f64 {
        (f64::from(t_rounds) * self.rate(user)).exp2() - 1.0
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ConfigDocument = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ConfigDocument::from(*self)).expect("config is always serializable")
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::new(SystemParams::fig1(db_to_linear(30.0))).expect("defaults are valid")
    }
}

/// JSON form of [`SystemConfig`]. Exactly one of `rho` and `rho_db` must be
/// present; `lambda1`/`lambda2` are optional and checked when given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_db: Option<f64>,
    pub d1: f64,
    pub d2: f64,
    pub zeta: f64,
    pub rate1: f64,
    pub rate2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
}

impl From<SystemConfig> for ConfigDocument {
    fn from(c: SystemConfig) -> Self {
        ConfigDocument {
            alpha1: c.alpha1,
            alpha2: c.alpha2,
            rho: Some(c.rho),
            rho_db: None,
            d1: c.d1,
            d2: c.d2,
            zeta: c.zeta,
            rate1: c.rate1,
            rate2: c.rate2,
            lambda1: Some(c.lambda1),
            lambda2: Some(c.lambda2),
        }
    }
}

impl TryFrom<ConfigDocument> for SystemConfig {
    type Error = Error;

    fn try_from(doc: ConfigDocument) -> Result<Self> {
        let rho = match (doc.rho, doc.rho_db) {
            (Some(r), None) => r,
            (None, Some(db)) => db_to_linear(db),
            (Some(_), Some(_)) => return Err(Error::validation("`rho` and `rho_db` are mutually exclusive")),
            (None, None) => return Err(Error::validation("one of `rho` or `rho_db` is required")),
        };
        let cfg = SystemConfig::new(SystemParams {
            alpha1: doc.alpha1,
            alpha2: doc.alpha2,
            rho,
            d1: doc.d1,
            d2: doc.d2,
            zeta: doc.zeta,
            rate1: doc.rate1,
            rate2: doc.rate2,
        })?;
        for (name, given, derived) in [
            ("lambda1", doc.lambda1, cfg.lambda1),
            ("lambda2", doc.lambda2, cfg.lambda2),
        ] {
            if let Some(v) = given {
                if (v - derived).abs() > 1e-12 * derived {
                    return Err(Error::validation(format!(
                        "{name} = {v} disagrees with 1/(1+d^zeta) = {derived}"
                    )));
                }
            }
        }
        Ok(cfg)
    }
}

/// SINR of user 1 decoding its own message in one round, with user 2's
/// signal treated as interference. Also the SINR at user 2 for user 1's
/// message (same expression, different channel).
pub fn sinr_user1(gain_sq: f64, cfg: &SystemConfig) -> f64 {
    if gain_sq.is_infinite() {
        return cfg.beta();
    }
    cfg.alpha1 * gain_sq / (cfg.alpha2 * gain_sq + 1.0 / cfg.rho)
}

/// Per-round SINRs at user 2: `(user 1's message, own message after SIC)`.
pub fn sinr_user2_sic(gain_sq: f64, cfg: &SystemConfig) -> (f64, f64) {
    (sinr_user1(gain_sq, cfg), cfg.alpha2 * cfg.rho * gain_sq)
}

/// One realization of `|h|^2` on a Rayleigh link.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChannelDraw {
    pub gain_sq: f64,
}

/// Draws `|h|^2 ~ Exp(mean lambda)`.
#[inline]
pub fn draw_channel<R: Rng + ?Sized>(lambda: f64, stream: &mut R) -> ChannelDraw {
    let e: f64 = stream.sample(Exp1);
    ChannelDraw { gain_sq: lambda * e }
}
