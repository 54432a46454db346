use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_sis::harness::{self, ExperimentConfig, Mode};
use adaptive_sis::kv;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

/// Experiments on SIS epidemics over adaptive networks.
#[derive(Parser)]
#[command(name = "adaptive-sis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single stochastic simulation run
    Simulate(Common),
    /// Ensemble of runs, or a die-out scan when scan.omega_si is set
    Ensemble(Common),
    /// Integrate the simple pairwise model
    Pairwise(Common),
    /// Integrate the compact pairwise model
    Compact(Common),
    /// Scenario A regime diagram and transcritical line
    BifA(Common),
    /// Scenario B thresholds
    BifB(Common),
    /// Hopf boundary scan over tau
    Hopf(Common),
    /// Master equation for N <= 4
    Master(Common),
    /// Simulated network/epidemic map in scenario B
    Netmap(Common),
    /// Pooled power spectrum of ensemble prevalence
    Spectrum(Common),
    /// Simulation mean against the pairwise models, or two CSV files
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: out/<mode>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `key=value` entries, applied after the config file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::Simulate(c) => (Mode::Simulate, c),
            Command::Ensemble(c) => (Mode::Ensemble, c),
            Command::Pairwise(c) => (Mode::Pairwise, c),
            Command::Compact(c) => (Mode::Compact, c),
            Command::BifA(c) => (Mode::BifA, c),
            Command::BifB(c) => (Mode::BifB, c),
            Command::Hopf(c) => (Mode::Hopf, c),
            Command::Master(c) => (Mode::Master, c),
            Command::Netmap(c) => (Mode::Netmap, c),
            Command::Spectrum(c) => (Mode::Spectrum, c),
            Command::Compare(c) => (Mode::Compare, c),
        }
    }
}

enum Failure {
    Config(anyhow::Error),
    Other(anyhow::Error),
}

fn classify(e: adaptive_sis::Error) -> Failure {
    if e.is_config() {
        Failure::Config(e.into())
    } else {
        Failure::Other(e.into())
    }
}

fn execute(mode: Mode, args: Common) -> Result<(), Failure> {
    let mut doc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Config)?;
            kv::parse(&text).map_err(classify)?
        }
        None => kv::KvDoc::new(),
    };
    for entry in &args.set {
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| Failure::Config(anyhow::anyhow!("--set expects KEY=VALUE, got `{entry}`")))?;
        doc.insert(k.trim().to_string(), v.trim().to_string());
    }
    if let Some(seed) = args.seed {
        doc.insert("seed".into(), seed.to_string());
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.into()))?;
    }
    let cfg = ExperimentConfig::from_kv(&doc, Some(mode)).map_err(classify)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("out").join(mode.name()));
    let manifest = harness::run(&cfg, &out).map_err(classify)?;
    println!(
        "{}: {} files in {} ({:.2} s, {} cells resumed)",
        manifest.mode,
        manifest.files.len(),
        out.display(),
        manifest.wall_clock_secs,
        manifest.resumed_cells
    );
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let (mode, args) = cli.command.split();
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
