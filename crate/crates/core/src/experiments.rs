//! Figure and table sweeps: grids of analytic and Monte Carlo outage values
//! written as CSV.
//!
//! Every Monte Carlo point draws from its own seed, derived from the master
//! seed and the point's coordinates, so output does not depend on the
//! worker count or the evaluation order. Rows are sorted before writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytic::{self, QuadratureSpec, Theorem1Options};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, SystemConfig, SystemParams, User};
use crate::montecarlo::{self, OutageEstimate, SimPlan};
use crate::stream;
use crate::tradeoff;

/// Which engines a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engines {
    pub analytic: bool,
    pub mc: bool,
}

impl Engines {
    pub const BOTH: Engines = Engines {
        analytic: true,
        mc: true,
    };

    /// Parses a comma-separated list such as `analytic,mc`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut e = Engines {
            analytic: false,
            mc: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "analytic" => e.analytic = true,
                "mc" => e.mc = true,
                other => return Err(Error::validation(format!("unknown engine {other:?}"))),
            }
        }
        if !e.analytic && !e.mc {
            return Err(Error::validation("at least one engine must be selected"));
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    SnrSweep,
    RoundSweep,
    TradeoffCurve,
    Diversity,
}

/// Layout of one experiment: the swept coordinate, engines and destination.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// dB values, round counts or `alpha2` values depending on `kind`.
    pub grid: Vec<f64>,
    pub engines: Engines,
    pub output_path: PathBuf,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, grid: Vec<f64>, engines: Engines, output_path: impl Into<PathBuf>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::validation("sweep grid is empty"));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("sweep grid must be strictly increasing"));
        }
        if !engines.analytic && !engines.mc {
            return Err(Error::validation("at least one engine must be selected"));
        }
        Ok(SweepSpec {
            kind,
            grid,
            engines,
            output_path: output_path.into(),
        })
    }
}

/// Evaluates `[start, stop]` in `step` increments, inclusive of `stop`.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Shared knobs for the figure commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Base Monte Carlo trials per point; escalated tenfold when fewer than
    /// 100 outages are seen.
    pub trials: u64,
    pub escalate: bool,
    pub engines: Engines,
    pub quad: QuadratureSpec,
    pub theorem1_literal: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 2019,
            trials: 1_000_000,
            escalate: true,
            engines: Engines::BOTH,
            quad: QuadratureSpec::default(),
            theorem1_literal: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    Noma,
    Oma,
}

impl Scheme {
    fn as_str(self) -> &'static str {
        match self {
            Scheme::Noma => "noma",
            Scheme::Oma => "oma",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Scheme::Noma => 1,
            Scheme::Oma => 2,
        }
    }
}

/// How the analytic column of a row was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact single-round CDF.
    ExactCdf,
    /// Laplace transform + composition expansion + Gaver-Stehfest.
    LaplaceStehfest,
    /// Same, keeping the printed `1/r` factor.
    LaplaceStehfestLiteral,
    /// Erlang CDF assuming SIC always succeeds (high-SNR form).
    ErlangHighSnr,
    /// Erlang CDF of the OMA accumulated SNR.
    Erlang,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactCdf => "exact_cdf",
            Method::LaplaceStehfest => "laplace_stehfest",
            Method::LaplaceStehfestLiteral => "laplace_stehfest_literal",
            Method::ErlangHighSnr => "erlang_highsnr",
            Method::Erlang => "erlang",
        }
    }
}

/// One outage point of an SNR or round sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageRow {
    pub alpha2: f64,
    pub snr_db: f64,
    pub user: User,
    pub scheme: Scheme,
    pub t_rounds: u32,
    pub method: Method,
    pub p_analytic: Option<f64>,
    pub mc: Option<OutageEstimate>,
}

impl OutageRow {
    fn sort_key(&self) -> (User, Scheme, u32, i64, i64) {
        (
            self.user,
            self.scheme,
            self.t_rounds,
            (self.snr_db * 1e6).round() as i64,
            (self.alpha2 * 1e9).round() as i64,
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Header of the outage CSVs.
pub const OUTAGE_HEADER: &str =
    "alpha2,snr_db,user,scheme,t_rounds,method,p_analytic,p_mc,mc_stderr,mc_trials,mc_ci_lo,mc_ci_hi";

pub fn outage_csv(rows: &[OutageRow]) -> String {
    let mut out = String::from(OUTAGE_HEADER);
    out.push('\n');
    for r in rows {
        let mc = r.mc.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha2,
            r.snr_db,
            r.user,
            r.scheme.as_str(),
            r.t_rounds,
            r.method.as_str(),
            opt(r.p_analytic),
            opt(mc.map(|e| e.p_hat)),
            opt(mc.map(|e| e.std_err)),
            mc.map(|e| e.trials.to_string()).unwrap_or_default(),
            opt(mc.map(|e| e.ci95.0)),
            opt(mc.map(|e| e.ci95.1)),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Evaluates one `(cfg, user, scheme, T)` point with the selected engines.
pub fn evaluate_point(
    cfg: &SystemConfig,
    user: User,
    scheme: Scheme,
    t_rounds: u32,
    opts: &RunOptions,
    point_seed: u64,
) -> Result<OutageRow> {
    let (method, p_analytic) = match (scheme, user) {
        (Scheme::Noma, User::One) if t_rounds == 1 && !opts.theorem1_literal => {
            (Method::ExactCdf, analytic::outage_noma_user1_single_round(cfg))
        }
        (Scheme::Noma, User::One) => {
            let method = if opts.theorem1_literal {
                Method::LaplaceStehfestLiteral
            } else {
                Method::LaplaceStehfest
            };
            let th1 = Theorem1Options {
                literal: opts.theorem1_literal,
                ..Default::default()
            };
            let p = if opts.engines.analytic {
                analytic::outage_user1_analytic(cfg, t_rounds, &opts.quad, th1)?
            } else {
                f64::NAN
            };
            (method, p)
        }
        (Scheme::Noma, User::Two) => (
            Method::ErlangHighSnr,
            analytic::outage_user2_highsnr(cfg, t_rounds)?.probability,
        ),
        (Scheme::Oma, u) => (Method::Erlang, analytic::outage_oma(cfg, u, t_rounds)?),
    };

    let mc = if opts.engines.mc {
        let plan = SimPlan::new(opts.trials, t_rounds, point_seed)?;
        let run = |p: &SimPlan| match (scheme, user) {
            (Scheme::Noma, User::One) => montecarlo::simulate_outage_user1(cfg, p),
            (Scheme::Noma, User::Two) => montecarlo::simulate_outage_user2(cfg, p),
            (Scheme::Oma, u) => montecarlo::simulate_oma(cfg, u, p),
        };
        Some(if opts.escalate {
            montecarlo::with_escalation(plan, run)?
        } else {
            run(&plan)
        })
    } else {
        None
    };

    Ok(OutageRow {
        alpha2: cfg.alpha2(),
        snr_db: cfg.rho_db(),
        user,
        scheme,
        t_rounds,
        method,
        p_analytic: opts.engines.analytic.then_some(p_analytic),
        mc,
    })
}

fn point_seed(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(seed, |acc, &c| stream::derive(acc, c))
}

/// A grid point awaiting evaluation.
struct Job {
    cfg: SystemConfig,
    snr_db: f64,
    user: User,
    scheme: Scheme,
    t_rounds: u32,
    seed: u64,
}

fn run_jobs(jobs: Vec<Job>, opts: &RunOptions) -> Result<Vec<OutageRow>> {
    let mut rows = jobs
        .par_iter()
        .map(|j| {
            let mut row = evaluate_point(&j.cfg, j.user, j.scheme, j.t_rounds, opts, j.seed)?;
            // Report the grid value rather than the dB value recovered from
            // the linear SNR.
            row.snr_db = j.snr_db;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(OutageRow::sort_key);
    Ok(rows)
}

/// Outage versus SNR for both users, NOMA and OMA, each `T` in `t_list`.
pub fn run_fig1(base: &SystemConfig, snr_db: &[f64], t_list: &[u32], opts: &RunOptions) -> Result<Vec<OutageRow>> {
    let mut jobs = Vec::new();
    for (si, &db) in snr_db.iter().enumerate() {
        let cfg = base.with_rho(db_to_linear(db))?;
        for &t in t_list {
            for user in [User::One, User::Two] {
                for scheme in [Scheme::Noma, Scheme::Oma] {
                    let seed = point_seed(
                        opts.seed,
                        &[1, si as u64, u64::from(t), user.index() as u64, scheme.tag()],
                    );
                    jobs.push(Job {
                        cfg,
                        snr_db: db,
                        user,
                        scheme,
                        t_rounds: t,
                        seed,
                    });
                }
            }
        }
    }
    run_jobs(jobs, opts)
}

/// Default SNR grid for the SNR sweep: 0 to 50 dB in 5 dB steps.
pub fn fig1_snr_grid() -> Vec<f64> {
    linear_grid(0.0, 50.0, 5.0)
}

/// Outage versus number of rounds at fixed SNR for each power split.
pub fn run_fig2(base: &SystemConfig, alpha2_list: &[f64], t_list: &[u32], opts: &RunOptions) -> Result<Vec<OutageRow>> {
    let mut jobs = Vec::new();
    for (ai, &a2) in alpha2_list.iter().enumerate() {
        let cfg = base.with_alpha2(a2)?;
        for &t in t_list {
            for user in [User::One, User::Two] {
                for scheme in [Scheme::Noma, Scheme::Oma] {
                    let seed = point_seed(
                        opts.seed,
                        &[2, ai as u64, u64::from(t), user.index() as u64, scheme.tag()],
                    );
                    jobs.push(Job {
                        cfg,
                        snr_db: cfg.rho_db(),
                        user,
                        scheme,
                        t_rounds: t,
                        seed,
                    });
                }
            }
        }
    }
    run_jobs(jobs, opts)
}

/// Default configuration of the round sweep: rates (0.3, 0.5) at 35 dB.
pub fn fig2_base() -> SystemConfig {
    SystemConfig::new(SystemParams::fig2(0.3)).expect("defaults are valid")
}

/// Where user 2's NOMA outage first beats OMA along a round sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub alpha2: f64,
    pub rate2: f64,
    /// Strict rule: smallest `T` with `K(T) < 0`.
    pub t_min_strict: u32,
    /// Smallest `T` with `K(T) <= 0`.
    pub t_min_with_tie: u32,
    /// `K(t_min_with_tie) = 0` exactly.
    pub tie: bool,
    /// First `T` whose Monte Carlo NOMA estimate is below OMA's.
    pub mc_first_below: Option<u32>,
    /// Monte Carlo gap `P_NOMA - P_OMA` at the tie point and its standard
    /// error, when a tie exists and MC ran.
    pub tie_gap: Option<(f64, f64)>,
}

impl Crossover {
    /// Whether the tie-point gap is within `z` standard errors of zero.
    pub fn tie_consistent(&self, z: f64) -> Option<bool> {
        self.tie_gap.map(|(gap, se)| gap.abs() <= z * se)
    }
}

/// Summarizes the user-2 crossover for every power split in a round sweep.
pub fn fig2_crossovers(rows: &[OutageRow], rate2: f64) -> Vec<Crossover> {
    let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha2).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    alphas
        .into_iter()
        .map(|a2| {
            let find = |scheme: Scheme, t: u32| {
                rows.iter()
                    .find(|r| r.alpha2 == a2 && r.user == User::Two && r.scheme == scheme && r.t_rounds == t)
                    .and_then(|r| r.mc)
            };
            let mut ts: Vec<u32> = rows.iter().filter(|r| r.alpha2 == a2).map(|r| r.t_rounds).collect();
            ts.sort_unstable();
            ts.dedup();
            let mc_first_below = ts
                .iter()
                .copied()
                .find(|&t| match (find(Scheme::Noma, t), find(Scheme::Oma, t)) {
                    (Some(n), Some(o)) => n.p_hat < o.p_hat,
                    _ => false,
                });
            let t_tie = tradeoff::min_rounds_allowing_tie(a2, rate2);
            let tie = tradeoff::is_tie(t_tie, a2, rate2);
            let tie_gap = if tie {
                match (find(Scheme::Noma, t_tie), find(Scheme::Oma, t_tie)) {
                    (Some(n), Some(o)) => Some((n.p_hat - o.p_hat, (n.std_err.powi(2) + o.std_err.powi(2)).sqrt())),
                    _ => None,
                }
            } else {
                None
            };
            Crossover {
                alpha2: a2,
                rate2,
                t_min_strict: tradeoff::min_rounds(a2, rate2),
                t_min_with_tie: t_tie,
                tie,
                mc_first_below,
                tie_gap,
            }
        })
        .collect()
}

/// `L(alpha2 | R2, T)` curve and the closed-form roots.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffTable {
    pub rate2: f64,
    /// `(T, alpha2, L)`.
    pub curve: Vec<(u32, f64, f64)>,
    /// `(T, root)`.
    pub roots: Vec<(u32, f64)>,
}

impl TradeoffTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("record,t_rounds,alpha2,l_value\n");
        for &(t, a, l) in &self.curve {
            writeln!(out, "curve,{t},{a},{l}").expect("infallible");
        }
        for &(t, root) in &self.roots {
            writeln!(out, "root,{t},{root},0").expect("infallible");
        }
        out
    }

    /// Fixed-width table of the roots, four decimals.
    pub fn roots_table(&self) -> String {
        let mut head = String::from("T      |");
        let mut vals = String::from("alpha2 |");
        for &(t, root) in &self.roots {
            write!(head, " {t:>6} |").expect("infallible");
            write!(vals, " {root:>6.4} |").expect("infallible");
        }
        format!("{head}\n{vals}\n")
    }
}

/// `L(alpha2 | rate2, T)` over `alpha2_grid` for each `T`, plus roots.
pub fn run_fig3_table1(rate2: f64, alpha2_grid: &[f64], t_list: &[u32]) -> TradeoffTable {
    let curve = t_list
        .iter()
        .flat_map(|&t| {
            alpha2_grid
                .iter()
                .map(move |&a| (t, a, tradeoff::l_function(a, rate2, t)))
        })
        .collect();
    let roots = t_list
        .iter()
        .map(|&t| (t, tradeoff::alpha2_threshold(t, rate2)))
        .collect();
    TradeoffTable { rate2, curve, roots }
}

/// `alpha2` grid of the tradeoff curve: 0.05 to 0.50 in 0.01 steps.
pub fn fig3_alpha2_grid() -> Vec<f64> {
    (5..=50).map(|i| f64::from(i) / 100.0).collect()
}

/// Analytic outage curve and its log-log fit for one `(user, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityCurve {
    pub user: User,
    pub t_rounds: u32,
    pub method: Method,
    /// `(snr_db, p)`.
    pub points: Vec<(f64, f64)>,
    pub fit: Option<tradeoff::SlopeFit>,
}

/// User-1 values below this are treated as quadrature noise.
pub const USER1_NOISE_FLOOR: f64 = 1e-12;

/// Default diversity window and spacing: 30 to 50 dB in 2.5 dB steps.
pub fn diversity_snr_grid() -> Vec<f64> {
    linear_grid(30.0, 50.0, 2.5)
}

/// Fits the diversity order of each user's analytic curve for each `T`.
pub fn run_diversity(
    base: &SystemConfig,
    snr_db: &[f64],
    t_list: &[u32],
    quad: &QuadratureSpec,
) -> Result<Vec<DiversityCurve>> {
    let window = (
        snr_db.first().copied().unwrap_or(30.0),
        snr_db.last().copied().unwrap_or(50.0),
    );
    let mut specs = Vec::new();
    for user in [User::One, User::Two] {
        for &t in t_list {
            specs.push((user, t));
        }
    }
    specs
        .par_iter()
        .map(|&(user, t)| {
            let mut points = Vec::with_capacity(snr_db.len());
            for &db in snr_db {
                let cfg = base.with_rho(db_to_linear(db))?;
                let p = match user {
                    User::One => analytic::outage_user1_analytic(&cfg, t, quad, Default::default())?,
                    User::Two => analytic::outage_user2_highsnr(&cfg, t)?.probability,
                };
                points.push((db, p));
            }
            let usable: Vec<(f64, f64)> = points
                .iter()
                .filter(|(_, p)| user == User::Two || *p >= USER1_NOISE_FLOOR)
                .map(|&(db, p)| (db_to_linear(db), p))
                .collect();
            let fit = tradeoff::diversity_slope(&usable, window).ok();
            let method = match user {
                User::One => Method::LaplaceStehfest,
                User::Two => Method::ErlangHighSnr,
            };
            Ok(DiversityCurve {
                user,
                t_rounds: t,
                method,
                points,
                fit,
            })
        })
        .collect()
}

pub fn diversity_csv(curves: &[DiversityCurve]) -> String {
    let mut out = String::from("record,user,t_rounds,method,snr_db,p_analytic,slope,intercept,r_squared,order\n");
    for c in curves {
        for &(db, p) in &c.points {
            writeln!(
                out,
                "point,{},{},{},{db},{p},,,,",
                c.user,
                c.t_rounds,
                c.method.as_str()
            )
            .expect("infallible");
        }
        match &c.fit {
            Some(f) => writeln!(
                out,
                "fit,{},{},{},,,{},{},{},{}",
                c.user,
                c.t_rounds,
                c.method.as_str(),
                f.slope,
                f.intercept,
                f.r_squared,
                f.order()
            ),
            None => writeln!(out, "fit,{},{},{},,,,,,", c.user, c.t_rounds, c.method.as_str()),
        }
        .expect("infallible");
    }
    out
}

fn gnuplot_list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Gnuplot script that renders the CSV written for `kind`. `t_list` and
/// `alpha2_list` pick the curves; `alpha2_list` only matters for round
/// sweeps.
pub fn plot_script(kind: SweepKind, csv: &Path, t_list: &[u32], alpha2_list: &[f64]) -> String {
    let mut s = String::from("set datafile separator \",\"\nset key outside right\nset grid\n");
    writeln!(s, "csv = \"{}\"", csv.display().to_string().replace('"', "\\\"")).expect("infallible");
    writeln!(s, "ts = \"{}\"", gnuplot_list(t_list)).expect("infallible");
    let body = match kind {
        SweepKind::SnrSweep => concat!(
            "set logscale y\nset format y \"10^{%L}\"\nset xlabel \"SNR (dB)\"\nset ylabel \"outage probability\"\n",
            "sel(u, sc, t) = strcol(3) eq u && strcol(4) eq sc && $5 == t + 0\n",
            "plot for [u in \"1 2\"] for [sc in \"noma oma\"] for [t in ts] csv using 2:(sel(u, sc, t) ? $7 : NaN) \\\n",
            "       with lines title sprintf(\"user %s %s T=%s\", u, sc, t), \\\n",
            "     for [u in \"1 2\"] for [sc in \"noma oma\"] for [t in ts] csv using 2:(sel(u, sc, t) ? $8 : NaN) \\\n",
            "       with points pt 6 notitle\n",
        )
        .to_string(),
        SweepKind::RoundSweep => format!(
            concat!(
                "set logscale y\nset xlabel \"rounds T\"\nset ylabel \"user 2 outage probability\"\n",
                "as = \"{}\"\n",
                "sel(a, sc) = strcol(3) eq \"2\" && strcol(4) eq sc && abs($1 - a) < 1e-9\n",
                "plot for [a in as] for [sc in \"noma oma\"] csv using 5:(sel(a + 0, sc) ? $8 : NaN) \\\n",
                "       with linespoints title sprintf(\"alpha2=%s %s\", a, sc)\n",
            ),
            gnuplot_list(alpha2_list)
        ),
        SweepKind::TradeoffCurve => concat!(
            "set xlabel \"alpha2\"\nset ylabel \"L(alpha2)\"\nset xzeroaxis\n",
            "plot for [t in ts] csv using 3:(strcol(1) eq \"curve\" && $2 == t + 0 ? $4 : NaN) \\\n",
            "       with lines title sprintf(\"T=%s\", t), \\\n",
            "     csv using 3:(strcol(1) eq \"root\" ? 0 : NaN) with points pt 7 title \"roots\"\n",
        )
        .to_string(),
        SweepKind::Diversity => concat!(
            "set logscale y\nset xlabel \"SNR (dB)\"\nset ylabel \"outage probability\"\n",
            "plot for [u in \"1 2\"] for [t in ts] csv using 5:(strcol(1) eq \"point\" && strcol(2) eq u && $3 == t + 0 ? $6 : NaN) \\\n",
            "       with linespoints title sprintf(\"user %s T=%s\", u, t)\n",
        )
        .to_string(),
    };
    s.push_str(&body);
    s
}
