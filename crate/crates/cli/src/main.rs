use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coopkey::harness::{run_experiment, write_outputs, ExperimentConfig, ExperimentId};

/// Simulate cooperative physical-layer key generation and write the
/// results as CSV.
#[derive(Parser, Debug)]
#[command(name = "coopkey", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic key-rate bounds against observation length.
    #[command(name = "bounds_vs_To")]
    BoundsVsTo(RunArgs),
    /// Analytic cooperative key-rate bounds against the number of relays.
    #[command(name = "bounds_vs_N")]
    BoundsVsN(RunArgs),
    /// Key rate against quantization level, analytic and simulated.
    #[command(name = "rate_vs_q")]
    RateVsQ(RunArgs),
    /// Symbol disagreement and bit error rate against quantization level.
    #[command(name = "ber_vs_q")]
    BerVsQ(RunArgs),
    /// Symbol disagreement and bit error rate against observation length.
    #[command(name = "ber_vs_To")]
    BerVsTo(RunArgs),
    /// Simulated key rate against the number of relays.
    #[command(name = "rate_vs_N_sim")]
    RateVsNSim(RunArgs),
    /// Randomness tests on simulated key bits.
    #[command(name = "nist_table")]
    NistTable(RunArgs),
    /// Full sessions with reconciliation and privacy amplification.
    #[command(name = "e2e_keygen")]
    E2eKeygen(RunArgs),
    /// Print an experiment's default configuration.
    ShowConfig { experiment: String },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Extra key=value setting, applied after the config file
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(id: ExperimentId, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_text(id, &text)
                .with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::defaults(id),
    };
    for kv in &args.overrides {
        cfg.apply_override(kv)
            .with_context(|| format!("--override {kv}"))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(id: ExperimentId, args: &RunArgs) -> Result<()> {
    let cfg = load(id, args)?;
    let start = Instant::now();
    let results = run_experiment(&cfg).with_context(|| format!("running {id}"))?;
    let (csv, manifest) = write_outputs(&args.out, &cfg, &results)?;
    println!(
        "{id}: {} rows in {:.1} s",
        results.rows.len(),
        start.elapsed().as_secs_f64()
    );
    println!("  {}", csv.display());
    println!("  {}", manifest.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (id, args) = match &cli.command {
        Command::BoundsVsTo(a) => (ExperimentId::BoundsVsTo, a),
        Command::BoundsVsN(a) => (ExperimentId::BoundsVsN, a),
        Command::RateVsQ(a) => (ExperimentId::RateVsQ, a),
        Command::BerVsQ(a) => (ExperimentId::BerVsQ, a),
        Command::BerVsTo(a) => (ExperimentId::BerVsTo, a),
        Command::RateVsNSim(a) => (ExperimentId::RateVsNSim, a),
        Command::NistTable(a) => (ExperimentId::NistTable, a),
        Command::E2eKeygen(a) => (ExperimentId::E2eKeygen, a),
        Command::ShowConfig { experiment } => {
            let Ok(id) = experiment.parse::<ExperimentId>() else {
                let names: Vec<_> = ExperimentId::ALL.iter().map(|e| e.name()).collect();
                bail!(
                    "unknown experiment {experiment:?}; expected one of {}",
                    names.join(", ")
                );
            };
            print!("{}", ExperimentConfig::defaults(id).to_text());
            return Ok(());
        }
    };
    run(id, args)
}
