//! Command-line front end: analytic and Monte Carlo evaluation of a single
//! configuration, and the figure/table sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use noma_harq::analytic::{self, QuadratureSpec, Theorem1Options};
use noma_harq::experiments::{self, Engines, RunOptions, SweepKind, SweepSpec};
use noma_harq::montecarlo::{self, SimPlan};
use noma_harq::tradeoff;
use noma_harq::{Error, SystemConfig, SystemParams, User};

#[derive(Parser)]
#[command(
    name = "noma-harq",
    version,
    about = "Outage analysis of two-user NOMA with HARQ chase combining"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON system configuration (alpha1, alpha2, rho | rho_db, d1, d2, zeta, rate1, rate2)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every Monte Carlo stream
    #[arg(long, global = true, default_value_t = 2019)]
    seed: u64,

    /// Base Monte Carlo trials per point (escalated 10x when fewer than 100 outages occur)
    #[arg(long, global = true, default_value_t = 1_000_000)]
    trials: u64,

    /// Disable the 10x trial escalation for rare events
    #[arg(long, global = true)]
    no_escalate: bool,

    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Engines to run: analytic, mc, or both
    #[arg(long, global = true, default_value = "analytic,mc")]
    engines: String,

    /// Evaluate the user-1 closed form with the printed 1/r factor, for comparison
    #[arg(long, global = true)]
    theorem1_literal: bool,

    /// Chebyshev node count
    #[arg(long, global = true, default_value_t = QuadratureSpec::DEFAULT_NODES)]
    nodes: usize,

    /// Stehfest term count (even, at most 18)
    #[arg(long, global = true, default_value_t = QuadratureSpec::DEFAULT_TERMS)]
    stehfest_terms: usize,

    /// Also write a gnuplot script for the sweep's CSV (requires --out)
    #[arg(long, global = true)]
    plot_script: Option<PathBuf>,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form outage values for one configuration
    Analytic {
        /// Number of transmission rounds
        #[arg(short, long, default_value_t = 1)]
        t: u32,
    },
    /// Monte Carlo outage estimates for one configuration
    Simulate {
        #[arg(short, long, default_value_t = 1)]
        t: u32,
        /// Also run the packet-level retransmission protocol with this many packets
        #[arg(long)]
        packets: Option<u64>,
    },
    /// Outage versus SNR for both users, NOMA and OMA
    Fig1 {
        /// Round counts to sweep
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        t_list: Vec<u32>,
        /// SNR grid in dB
        #[arg(long, value_delimiter = ',')]
        snr_db: Option<Vec<f64>>,
    },
    /// Outage versus number of rounds at fixed SNR, for several power splits
    Fig2 {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        t_list: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.3")]
        alpha2_list: Vec<f64>,
    },
    /// L(alpha2) curves and their roots
    Fig3 {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        t_list: Vec<u32>,
        /// Target rate of user 2 (defaults to 0.5, or the config's rate2)
        #[arg(long)]
        rate2: Option<f64>,
    },
    /// Diversity-order fits of the analytic curves
    Diversity {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        t_list: Vec<u32>,
    },
    /// NOMA-vs-OMA decision rules for the configured power split and rates
    Tradeoff {
        /// Largest round count to tabulate
        #[arg(long, default_value_t = 6)]
        t_max: u32,
    },
}

fn load_config(path: Option<&Path>, fallback: SystemConfig) -> Result<SystemConfig, Error> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            SystemConfig::from_json(&text)
        }
        None => Ok(fallback),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => experiments::write_output(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_plot(g: &Global, kind: SweepKind, t_list: &[u32], alpha2_list: &[f64]) -> Result<(), Error> {
    let Some(script) = g.plot_script.as_deref() else {
        return Ok(());
    };
    let csv = g.out.as_deref().expect("checked before the sweep");
    experiments::write_output(script, &experiments::plot_script(kind, csv, t_list, alpha2_list))
}

fn grid_of<T: Into<f64> + Copy>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| x.into()).collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    let g = &cli.global;
    if g.plot_script.is_some() && g.out.is_none() {
        return Err(Error::Validation(
            "--plot-script needs --out for the CSV it plots".into(),
        ));
    }
    if let Some(n) = g.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    }
    let quad = QuadratureSpec::new(g.nodes, g.stehfest_terms)?;
    let engines = Engines::parse(&g.engines)?;
    let opts = RunOptions {
        seed: g.seed,
        trials: g.trials,
        escalate: !g.no_escalate,
        engines,
        quad: quad.clone(),
        theorem1_literal: g.theorem1_literal,
    };
    let out = g.out.as_deref();
    let out_path = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("-"));
    let config = g.config.as_deref();

    match cli.command {
        Command::Analytic { t } => {
            let cfg = load_config(config, SystemConfig::default())?;
            let th1 = Theorem1Options {
                literal: g.theorem1_literal,
                ..Default::default()
            };
            let high = analytic::outage_user2_highsnr(&cfg, t)?;
            let cmp = tradeoff::single_round_comparison(&cfg);
            let doc = json!({
                "config": serde_json::from_str::<serde_json::Value>(&cfg.to_json())?,
                "rho_db": cfg.rho_db(),
                "t_rounds": t,
                "user1_noma": analytic::outage_user1_analytic(&cfg, t, &quad, th1)?,
                "user1_noma_exact_single_round": analytic::outage_noma_user1_single_round(&cfg),
                "user2_noma_highsnr": high.probability,
                "user2_highsnr_valid": high.valid,
                "user1_oma": analytic::outage_oma(&cfg, User::One, t)?,
                "user2_oma": analytic::outage_oma(&cfg, User::Two, t)?,
                "single_round": cmp,
                "theorem1_literal": g.theorem1_literal,
            });
            emit(out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Command::Simulate { t, packets } => {
            let cfg = load_config(config, SystemConfig::default())?;
            let plan = SimPlan::new(g.trials, t, g.seed)?;
            let mut doc = json!({
                "rho_db": cfg.rho_db(),
                "t_rounds": t,
                "user1_noma": montecarlo::simulate_outage_user1(&cfg, &plan),
                "user2_noma": montecarlo::simulate_outage_user2(&cfg, &plan),
                "user1_oma": montecarlo::simulate_oma(&cfg, User::One, &plan),
                "user2_oma": montecarlo::simulate_oma(&cfg, User::Two, &plan),
            });
            if let Some(n) = packets {
                doc["protocol"] = serde_json::to_value(montecarlo::simulate_protocol(&cfg, t, n, g.seed)?)?;
            }
            emit(out, &format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Command::Fig1 { t_list, snr_db } => {
            let base = load_config(config, SystemConfig::default())?;
            let grid = snr_db.unwrap_or_else(experiments::fig1_snr_grid);
            SweepSpec::new(SweepKind::SnrSweep, grid.clone(), engines, &out_path)?;
            SweepSpec::new(SweepKind::RoundSweep, grid_of(&t_list), engines, &out_path)?;
            let rows = experiments::run_fig1(&base, &grid, &t_list, &opts)?;
            emit(out, &experiments::outage_csv(&rows))?;
            emit_plot(g, SweepKind::SnrSweep, &t_list, &[])
        }
        Command::Fig2 { t_list, alpha2_list } => {
            let base = load_config(config, experiments::fig2_base())?;
            SweepSpec::new(SweepKind::RoundSweep, grid_of(&t_list), engines, &out_path)?;
            let rows = experiments::run_fig2(&base, &alpha2_list, &t_list, &opts)?;
            emit(out, &experiments::outage_csv(&rows))?;
            emit_plot(g, SweepKind::RoundSweep, &t_list, &alpha2_list)?;
            for c in experiments::fig2_crossovers(&rows, base.rate2()) {
                eprintln!(
                    "alpha2 = {}: strict minimum rounds {}, with tie {}{}; MC first NOMA < OMA at T = {}{}",
                    c.alpha2,
                    c.t_min_strict,
                    c.t_min_with_tie,
                    if c.tie { " (K = 0 tie)" } else { "" },
                    c.mc_first_below.map_or("none".to_string(), |t| t.to_string()),
                    c.tie_gap
                        .map(|(gap, se)| format!("; gap at tie {gap:.3e} +/- {se:.3e}"))
                        .unwrap_or_default(),
                );
            }
            Ok(())
        }
        Command::Fig3 { t_list, rate2 } => {
            let rate2 = match (rate2, config) {
                (Some(r), _) => r,
                (None, Some(_)) => load_config(config, SystemConfig::default())?.rate2(),
                (None, None) => 0.5,
            };
            let grid = experiments::fig3_alpha2_grid();
            SweepSpec::new(
                SweepKind::TradeoffCurve,
                grid.clone(),
                Engines {
                    analytic: true,
                    mc: false,
                },
                &out_path,
            )?;
            let table = experiments::run_fig3_table1(rate2, &grid, &t_list);
            emit(out, &table.to_csv())?;
            emit_plot(g, SweepKind::TradeoffCurve, &t_list, &[])?;
            eprint!("{}", table.roots_table());
            Ok(())
        }
        Command::Diversity { t_list } => {
            let base = load_config(config, SystemConfig::default())?;
            let grid = experiments::diversity_snr_grid();
            SweepSpec::new(
                SweepKind::Diversity,
                grid.clone(),
                Engines {
                    analytic: true,
                    mc: false,
                },
                &out_path,
            )?;
            let curves = experiments::run_diversity(&base, &grid, &t_list, &quad)?;
            emit(out, &experiments::diversity_csv(&curves))?;
            emit_plot(g, SweepKind::Diversity, &t_list, &[])?;
            for c in &curves {
                match &c.fit {
                    Some(f) => eprintln!(
                        "user {} T = {}: order {:.3} (r^2 {:.4})",
                        c.user,
                        c.t_rounds,
                        f.order(),
                        f.r_squared
                    ),
                    None => eprintln!("user {} T = {}: not enough usable points", c.user, c.t_rounds),
                }
            }
            Ok(())
        }
        Command::Tradeoff { t_max } => {
            let base = load_config(config, SystemConfig::new(SystemParams::fig2(0.3))?)?;
            let report = tradeoff::tradeoff_report(base.alpha2(), base.rate2(), t_max)?;
            emit(out, &format!("{}\n", serde_json::to_string_pretty(&report)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
