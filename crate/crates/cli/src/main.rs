//! Command-line front end: single runs, sweeps and the offline estimator.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ntnsim_core::estimator::{
    estimate_n, optimal_buffer_size, optimal_discard_timer, solve_max_sojourn, ObservationSet,
    ObservationSide,
};
use ntnsim_core::metrics::{emit_csv, emit_timer_log, RunMetrics};
use ntnsim_core::run::{run_scenario, run_sweep};
use ntnsim_core::scenario::{parse_config, ScenarioConfig};
use ntnsim_core::sim::TimeMs;

/// Seed override honoured when no --seed flag is given.
const SEED_ENV: &str = "NTNSIM_SEED";

#[derive(Parser)]
#[command(
    name = "ntnsim",
    about = "Deterministic simulator for 5G-NTN layer-2 timers and buffers over LEO links",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (flat key = value format).
    #[arg(long)]
    config: PathBuf,
    /// Write per-run results as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-adaptation timer log as CSV.
    #[arg(long)]
    timer_log: Option<PathBuf>,
    /// Override the config (and NTNSIM_SEED) seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the stdout summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single scenario.
    Run(RunArgs),
    /// Execute every sweep point of a scenario.
    Sweep(RunArgs),
    /// Offline estimator: derive n_hat, the discard timer and the buffer
    /// size from a file of observed sojourn timestamps (ms, separated by
    /// newlines or commas).
    Estimate {
        #[arg(long)]
        obs: PathBuf,
        /// Round-trip delay in ms.
        #[arg(long)]
        rd: f64,
        /// Total processing delay in ms.
        #[arg(long)]
        tpro: f64,
        /// Supported PDCP rate in packets per ms (for the buffer size).
        #[arg(long, default_value_t = 10.0)]
        rp: f64,
    },
}

fn load_config(path: &Path, seed_flag: Option<u64>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut cfg = parse_config(&text).context("config rejected")?;
    if let Some(seed) = seed_flag {
        cfg.seed = seed;
    } else if let Ok(value) = std::env::var(SEED_ENV) {
        cfg.seed = value
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got '{value}'"))?;
    }
    Ok(cfg)
}

fn print_summary(m: &RunMetrics) {
    println!(
        "{}: seed {} | accepted {} rejected {} acked {} expired {}",
        m.scenario_id, m.seed, m.accepted, m.rejected, m.acked, m.expired_final
    );
    println!(
        "  timers: n_hat {} m_hat {} t_d {:.3} ms t_r {:.3} ms t_re {:.3} ms | b_star {} cells (capacity {})",
        m.n_hat, m.m_hat, m.t_d_ms, m.t_r_ms, m.t_re_ms, m.b_star, m.buffer_cells
    );
    match m.effective_rate {
        Some(rate) => println!("  throughput {rate:.4} pkts/ms"),
        None => println!("  throughput n/a (run shorter than the warm-up window)"),
    }
    if let Ok(avg) = m.avg_additional_delay() {
        println!(
            "  additional delay {avg:.3} ms over {} lost-ack packets",
            m.additional_delay_samples.len()
        );
    }
    println!(
        "  receiver: delivered {} duplicates {} reorder losses {} | rlc expiries {}",
        m.delivered_in_order, m.duplicates, m.reorder_losses, m.reassembly_expiries
    );
}

fn write_outputs(runs: &[RunMetrics], args: &RunArgs) -> Result<()> {
    if let Some(path) = &args.out {
        let rows = emit_csv(path, runs).context("writing results CSV")?;
        if !args.quiet {
            println!("wrote {rows} rows to {}", path.display());
        }
    }
    if let Some(path) = &args.timer_log {
        let rows = emit_timer_log(path, runs).context("writing timer log")?;
        if !args.quiet {
            println!("wrote {rows} adaptation records to {}", path.display());
        }
    }
    Ok(())
}

fn parse_stamps(text: &str) -> Result<Vec<f64>> {
    let mut stamps = Vec::new();
    for token in text.split(|c: char| c == ',' || c.is_whitespace()) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        stamps.push(
            token
                .parse::<f64>()
                .with_context(|| format!("bad timestamp '{token}'"))?,
        );
    }
    if stamps.is_empty() {
        bail!("no timestamps found in the observation file");
    }
    Ok(stamps)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args.config, args.seed)?;
            let metrics = run_scenario(&cfg)?;
            let runs = vec![metrics];
            write_outputs(&runs, &args)?;
            if !args.quiet {
                print_summary(&runs[0]);
            }
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args.config, args.seed)?;
            let runs = run_sweep(&cfg)?;
            write_outputs(&runs, &args)?;
            if !args.quiet {
                for m in &runs {
                    print_summary(m);
                }
            }
        }
        Command::Estimate { obs, rd, tpro, rp } => {
            let text = std::fs::read_to_string(&obs)
                .with_context(|| format!("cannot read observations {}", obs.display()))?;
            let stamps = parse_stamps(&text)?;
            let set = ObservationSet::from_stamps(
                ObservationSide::Transmitter,
                stamps.len(),
                stamps.iter().map(|&s| TimeMs(s)),
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let t_star = solve_max_sojourn(&set).map_err(|e| anyhow::anyhow!("{e}"))?;
            let n_hat = estimate_n(t_star, TimeMs(rd), TimeMs(tpro))
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let t_d = optimal_discard_timer(n_hat, TimeMs(rd), TimeMs(tpro));
            let b_star = optimal_buffer_size(n_hat, TimeMs(rd), TimeMs(tpro), rp);
            println!("n_hat = {n_hat}");
            println!("t_d_ms = {}", t_d.0);
            println!("b_star_cells = {b_star}");
        }
    }
    Ok(())
}
