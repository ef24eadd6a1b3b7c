//! Seeded Monte Carlo estimation of the outage events and of the
//! retransmission protocol.
//!
//! Trials are split into fixed-size chunks. Chunk `c` always draws from
//! stream `c` of the experiment's domain, and per-chunk integer counts are
//! summed, so estimates are bitwise identical for any worker count.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{draw_channel, sinr_user1, SystemConfig, User};
use crate::stream;

/// Default number of trials per chunk.
pub const DEFAULT_CHUNK: u64 = 1 << 16;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Minimum expected outage events before an estimate is trusted.
pub const MIN_EVENTS: f64 = 100.0;

// Stream domains; one per simulated event so that different estimators never
// share draws under the same seed.
const DOMAIN_USER1: u64 = 0x5531;
const DOMAIN_USER2: u64 = 0x5532;
const DOMAIN_OMA: u64 = 0x4f4d;
const DOMAIN_PROTOCOL: u64 = 0x5052;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimPlan {
    pub trials: u64,
    pub t_rounds: u32,
    pub seed: u64,
    pub chunk_size: u64,
}

impl SimPlan {
    /// Plan with the default chunk size (capped at `trials`).
    pub fn new(trials: u64, t_rounds: u32, seed: u64) -> Result<Self> {
        SimPlan {
            trials,
            t_rounds,
            seed,
            chunk_size: DEFAULT_CHUNK.min(trials.max(1)),
        }
        .validated()
    }

    pub fn with_chunk_size(self, chunk_size: u64) -> Result<Self> {
        SimPlan { chunk_size, ..self }.validated()
    }

    pub fn with_trials(self, trials: u64) -> Result<Self> {
        SimPlan {
            trials,
            chunk_size: self.chunk_size.min(trials.max(1)),
            ..self
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if self.trials == 0 || self.t_rounds == 0 || self.chunk_size == 0 {
            return Err(Error::validation(
                "trials, rounds and chunk size must all be at least 1",
            ));
        }
        if self.chunk_size > self.trials {
            return Err(Error::validation(format!(
                "chunk size {} exceeds trial count {}",
                self.chunk_size, self.trials
            )));
        }
        Ok(self)
    }

    fn chunks(&self) -> u64 {
        self.trials.div_ceil(self.chunk_size)
    }

    fn chunk_len(&self, c: u64) -> u64 {
        (self.trials - c * self.chunk_size).min(self.chunk_size)
    }
}

/// Where a probability came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Mc,
    Analytic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Mc => "mc",
            Source::Analytic => "analytic",
        })
    }
}

/// An outage probability with its sampling uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub trials: u64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    pub source: Source,
}

impl OutageEstimate {
    pub fn from_counts(outages: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p_hat = outages as f64 / n;
        OutageEstimate {
            p_hat,
            trials,
            std_err: (p_hat * (1.0 - p_hat) / n).sqrt(),
            ci95: wilson_interval(p_hat, trials, Z95),
            source: Source::Mc,
        }
    }

    pub fn analytic(p: f64) -> Self {
        OutageEstimate {
            p_hat: p,
            trials: 0,
            std_err: 0.0,
            ci95: (p, p),
            source: Source::Analytic,
        }
    }

    pub fn outages(&self) -> u64 {
        (self.p_hat * self.trials as f64).round() as u64
    }

    /// Wilson score interval at `z` standard errors.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        match self.source {
            Source::Mc => wilson_interval(self.p_hat, self.trials, z),
            Source::Analytic => (self.p_hat, self.p_hat),
        }
    }

    /// Whether `p` lies inside the Wilson interval at `z` standard errors.
    pub fn consistent_with(&self, p: f64, z: f64) -> bool {
        let (lo, hi) = self.wilson(z);
        p >= lo && p <= hi
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(p_hat: f64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).clamp(0.0, p_hat), (centre + half).clamp(p_hat, 1.0))
}

/// Runs `trial` over every chunk and counts the `true` outcomes.
fn count_events<F>(plan: &SimPlan, domain: u64, trial: F) -> u64
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    let key = stream::derive(plan.seed, domain);
    let counts: Vec<u64> = (0..plan.chunks())
        .into_par_iter()
        .map(|c| {
            let mut rng = stream::open(key, 0, c);
            (0..plan.chunk_len(c)).filter(|_| trial(&mut rng)).count() as u64
        })
        .collect();
    counts.iter().sum()
}

/// `Pr{ sum_t SINR_1->1 <= 2^(T R1) - 1 }`.
pub fn simulate_outage_user1(cfg: &SystemConfig, plan: &SimPlan) -> OutageEstimate {
    let r = cfg.accumulated_threshold(User::One, plan.t_rounds);
    let lambda = cfg.lambda1();
    let outages = count_events(plan, DOMAIN_USER1, |rng| {
        let acc: f64 = (0..plan.t_rounds)
            .map(|_| sinr_user1(draw_channel(lambda, rng).gain_sq, cfg))
            .sum();
        acc <= r
    });
    OutageEstimate::from_counts(outages, plan.trials)
}

/// User 2's joint event: it fails unless both the accumulated SINR for user
/// 1's message and its own accumulated SNR clear their thresholds. Both
/// sums see the same per-round channel.
pub fn simulate_outage_user2(cfg: &SystemConfig, plan: &SimPlan) -> OutageEstimate {
    let r1 = cfg.accumulated_threshold(User::One, plan.t_rounds);
    let r2 = cfg.accumulated_threshold(User::Two, plan.t_rounds);
    let lambda = cfg.lambda2();
    let own_gain = cfg.alpha2() * cfg.rho();
    let outages = count_events(plan, DOMAIN_USER2, |rng| {
        let (mut sic, mut own) = (0.0, 0.0);
        for _ in 0..plan.t_rounds {
            let g = draw_channel(lambda, rng).gain_sq;
            sic += sinr_user1(g, cfg);
            own += own_gain * g;
        }
        !(sic > r1 && own > r2)
    });
    OutageEstimate::from_counts(outages, plan.trials)
}

/// OMA with chase combining: `Pr{ (1/2) log2(1 + sum rho |h|^2) <= T R }`.
pub fn simulate_oma(cfg: &SystemConfig, user: User, plan: &SimPlan) -> OutageEstimate {
    let threshold = (2.0 * f64::from(plan.t_rounds) * cfg.rate(user)).exp2() - 1.0;
    let lambda = cfg.lambda(user);
    let rho = cfg.rho();
    let domain = stream::derive(DOMAIN_OMA, user.index() as u64);
    let outages = count_events(plan, domain, |rng| {
        let acc: f64 = (0..plan.t_rounds)
            .map(|_| rho * draw_channel(lambda, rng).gain_sq)
            .sum();
        acc <= threshold
    });
    OutageEstimate::from_counts(outages, plan.trials)
}

/// Runs `estimate` with `base` trials and, if fewer than [`MIN_EVENTS`]
/// outages were seen, once more with `10 * base`.
pub fn with_escalation<F>(plan: SimPlan, mut estimate: F) -> Result<OutageEstimate>
where
    F: FnMut(&SimPlan) -> OutageEstimate,
{
    let first = estimate(&plan);
    if first.p_hat * first.trials as f64 >= MIN_EVENTS {
        return Ok(first);
    }
    let bigger = plan.with_trials(plan.trials.saturating_mul(10))?;
    Ok(estimate(&bigger))
}

/// Outcome of the packet-level protocol simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolStats {
    /// `histogram[t-1]` counts packets delivered to both users after exactly
    /// `t` rounds; the last bucket (`t_max + 1`) counts discarded packets.
    pub rounds_used_histogram: Vec<u64>,
    pub packets: u64,
    pub user1_outage: OutageEstimate,
    pub user2_outage: OutageEstimate,
}

impl ProtocolStats {
    pub fn discarded(&self) -> u64 {
        *self
            .rounds_used_histogram
            .last()
            .expect("histogram has t_max + 1 buckets")
    }

    /// Mean number of transmissions per packet, counting discarded packets
    /// as `t_max` rounds.
    pub fn mean_rounds(&self) -> f64 {
        let t_max = self.rounds_used_histogram.len() - 1;
        let total: u64 = self
            .rounds_used_histogram
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1).min(t_max) as u64 * c)
            .sum();
        total as f64 / self.packets as f64
    }
}

#[derive(Default, Clone)]
struct ProtocolTally {
    histogram: Vec<u64>,
    user1_failed: u64,
    user2_failed: u64,
}

/// Simulates the HARQ-CC NOMA protocol packet by packet.
///
/// The base station resends the same superimposed codeword until both users
/// ACK or `t_max` rounds have elapsed. Each user combines every copy it
/// receives (MRC, so SINRs add). Every packet is encoded for the full
/// retransmission budget: a user decodes once its accumulated SINR clears
/// `2^(t_max R) - 1`. User 2 decodes its own message only after its
/// accumulated SINR for user 1's message has cleared user 1's threshold.
/// A user that has already ACKed ignores further copies.
pub fn simulate_protocol(cfg: &SystemConfig, t_max: u32, packets: u64, seed: u64) -> Result<ProtocolStats> {
    let plan = SimPlan::new(packets, t_max, seed)?;
    let r1 = cfg.accumulated_threshold(User::One, t_max);
    let r2 = cfg.accumulated_threshold(User::Two, t_max);
    let own_gain = cfg.alpha2() * cfg.rho();
    let key = stream::derive(seed, DOMAIN_PROTOCOL);
    let buckets = t_max as usize + 1;

    let tallies: Vec<ProtocolTally> = (0..plan.chunks())
        .into_par_iter()
        .map(|c| {
            let mut rng1 = stream::open(key, 1, c);
            let mut rng2 = stream::open(key, 2, c);
            let mut tally = ProtocolTally {
                histogram: vec![0; buckets],
                ..Default::default()
            };
            for _ in 0..plan.chunk_len(c) {
                let (mut acc1, mut sic, mut own) = (0.0, 0.0, 0.0);
                let (mut ok1, mut ok2) = (false, false);
                let mut delivered_at = None;
                for t in 1..=t_max {
                    // Both channels are drawn every round to keep the
                    // streams aligned across packets.
                    let g1 = draw_channel(cfg.lambda1(), &mut rng1).gain_sq;
                    let g2 = draw_channel(cfg.lambda2(), &mut rng2).gain_sq;
                    if !ok1 {
                        acc1 += sinr_user1(g1, cfg);
                        ok1 = acc1 > r1;
                    }
                    if !ok2 {
                        sic += sinr_user1(g2, cfg);
                        own += own_gain * g2;
                        ok2 = sic > r1 && own > r2;
                    }
                    if ok1 && ok2 {
                        delivered_at = Some(t);
                        break;
                    }
                }
                let bucket = delivered_at.map_or(t_max as usize, |t| t as usize - 1);
                tally.histogram[bucket] += 1;
                tally.user1_failed += u64::from(!ok1);
                tally.user2_failed += u64::from(!ok2);
            }
            tally
        })
        .collect();

    let mut histogram = vec![0u64; buckets];
    let (mut f1, mut f2) = (0, 0);
    for t in &tallies {
        histogram.iter_mut().zip(&t.histogram).for_each(|(h, v)| *h += v);
        f1 += t.user1_failed;
        f2 += t.user2_failed;
    }
    Ok(ProtocolStats {
        rounds_used_histogram: histogram,
        packets,
        user1_outage: OutageEstimate::from_counts(f1, packets),
        user2_outage: OutageEstimate::from_counts(f2, packets),
    })
}

/// Draws from an arbitrary generator; exposed for distribution tests.
pub fn sample_gains<R: Rng>(lambda: f64, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| draw_channel(lambda, rng).gain_sq).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::model::{db_to_linear, SystemParams};

    fn fig1(db: f64) -> SystemConfig {
        SystemConfig::new(SystemParams::fig1(db_to_linear(db))).unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(SimPlan::new(0, 1, 0).is_err());
        assert!(SimPlan::new(10, 0, 0).is_err());
        assert!(SimPlan::new(10, 1, 0).unwrap().with_chunk_size(11).is_err());
        assert_eq!(SimPlan::new(10, 1, 0).unwrap().chunk_size, 10);
        let p = SimPlan::new(100, 1, 0).unwrap().with_chunk_size(30).unwrap();
        assert_eq!(p.chunks(), 4);
        assert_eq!((0..4).map(|c| p.chunk_len(c)).sum::<u64>(), 100);
    }

    #[test]
    fn wilson_contains_estimate_and_stays_in_unit_interval() {
        for (k, n) in [(0u64, 10u64), (10, 10), (3, 1000), (500, 1000)] {
            let e = OutageEstimate::from_counts(k, n);
            let (lo, hi) = e.ci95;
            assert!(0.0 <= lo && lo <= e.p_hat && e.p_hat <= hi && hi <= 1.0);
        }
        let e = OutageEstimate::from_counts(0, 1000);
        assert!(e.ci95.1 > 0.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn no_power_means_certain_outage() {
        let cfg = SystemConfig::new(SystemParams::fig1(1e-6)).unwrap();
        let plan = SimPlan::new(20_000, 2, 1).unwrap();
        assert_eq!(simulate_outage_user1(&cfg, &plan).p_hat, 1.0);
        assert_eq!(simulate_outage_user2(&cfg, &plan).p_hat, 1.0);
        assert_eq!(simulate_oma(&cfg, User::Two, &plan).p_hat, 1.0);
    }

    #[test]
    fn bounded_sinr_gives_exact_outage() {
        // 2^(T R1) - 1 >= T beta for R1 = 3, T = 1.
        let cfg = fig1(60.0).with_rates(3.0, 0.8).unwrap();
        let plan = SimPlan::new(10_000, 1, 3).unwrap();
        assert_eq!(simulate_outage_user1(&cfg, &plan).p_hat, 1.0);
    }

    #[test]
    fn huge_snr_oma_never_fails() {
        let cfg = fig1(120.0);
        let plan = SimPlan::new(10_000, 1, 3).unwrap();
        assert_eq!(simulate_oma(&cfg, User::One, &plan).p_hat, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = fig1(20.0);
        let plan = SimPlan::new(300_000, 2, 42).unwrap().with_chunk_size(10_000).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        simulate_outage_user1(&cfg, &plan),
                        simulate_outage_user2(&cfg, &plan),
                        simulate_protocol(&cfg, 3, 50_000, 42).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn single_round_matches_exact_cdf() {
        let cfg = fig1(30.0);
        let plan = SimPlan::new(1_000_000, 1, 9).unwrap();
        let est = simulate_outage_user1(&cfg, &plan);
        let exact = analytic::outage_noma_user1_single_round(&cfg);
        assert!(est.consistent_with(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn joint_event_dominates_marginals() {
        let cfg = fig1(15.0);
        let plan = SimPlan::new(400_000, 1, 5).unwrap();
        let joint = simulate_outage_user2(&cfg, &plan);
        // Own-signal failure alone, from the exact single-round CDF.
        let own = analytic::outage_user2_highsnr(&cfg, 1).unwrap().probability;
        let sic = analytic::cdf_sinr_single(cfg.single_round_threshold(User::One), &cfg, User::Two).unwrap();
        assert!(joint.consistent_with(own.max(sic), 3.0) || joint.p_hat >= own.max(sic));
    }

    #[test]
    fn protocol_all_ack_at_huge_snr() {
        let cfg = fig1(60.0);
        let stats = simulate_protocol(&cfg, 4, 20_000, 1).unwrap();
        assert_eq!(stats.rounds_used_histogram.len(), 5);
        assert_eq!(stats.rounds_used_histogram.iter().sum::<u64>(), 20_000);
        assert!(stats.rounds_used_histogram[0] as f64 >= 0.99 * 20_000.0);
        assert!(stats.mean_rounds() < 1.02);
    }

    #[test]
    fn protocol_histogram_sums_to_packets() {
        let cfg = fig1(10.0);
        let stats = simulate_protocol(&cfg, 3, 12_345, 8).unwrap();
        assert_eq!(stats.rounds_used_histogram.iter().sum::<u64>(), 12_345);
        assert!(stats.discarded() >= stats.user1_outage.outages().max(stats.user2_outage.outages()));
    }

    #[test]
    fn escalation_triggers_on_rare_events() {
        let cfg = fig1(50.0);
        let plan = SimPlan::new(10_000, 1, 1).unwrap();
        let est = with_escalation(plan, |p| simulate_outage_user1(&cfg, p)).unwrap();
        assert_eq!(est.trials, 100_000);
        let cfg = fig1(10.0);
        let est = with_escalation(plan, |p| simulate_outage_user1(&cfg, p)).unwrap();
        assert_eq!(est.trials, 10_000);
    }
}
