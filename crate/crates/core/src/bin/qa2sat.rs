use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qa2sat_core::dynamics::landau_zener_demo;
use qa2sat_core::experiment::{Experiment, ExperimentConfig, Profile};
use qa2sat_core::{Error, Result};

/// Quantum-annealing experiments on hard 2-SAT ensembles.
#[derive(Parser)]
#[command(name = "qa2sat", version)]
struct Cli {
    /// Experiment config (JSON). Without it the profile's defaults are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Test)]
    profile: ProfileArg,
    /// No progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Test,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the instance ensembles (manifest.jsonl).
    Generate,
    /// Minimum-gap scan for every instance and variant (gaps.jsonl).
    Gap,
    /// Anneal every instance, variant and annealing time (runs.jsonl).
    Anneal,
    /// Simulated-annealing baseline (sa.jsonl).
    Sa,
    /// Aggregate tables into report/.
    Report,
    /// Two-level Landau-Zener sweep against the closed form.
    LzDemo {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Sweep rate.
        #[arg(long, default_value_t = PI)]
        c: f64,
        /// Half-width of the sweep window.
        #[arg(long, default_value_t = 200.0 / PI)]
        t_max: f64,
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::profile(match cli.profile {
            ProfileArg::Test => Profile::Test,
            ProfileArg::Full => Profile::Full,
        }),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    if let Command::LzDemo { gamma, c, t_max, steps } = cli.command {
        let p = landau_zener_demo(gamma, c, t_max, steps)?;
        let formula = 1.0 - (-PI * gamma * gamma / c).exp();
        return Ok(json!({ "gamma": gamma, "c": c, "t_max": t_max, "p": p, "lz_formula": formula }));
    }
    let mut exp = Experiment::new(load_config(cli)?)?.with_progress(!cli.quiet);
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::InvalidParameter("--workers must be at least 1".into()));
        }
        exp = exp.with_workers(w);
    }
    let summary = match cli.command {
        Command::Generate => exp.generate()?,
        Command::Gap => exp.gap()?,
        Command::Anneal => exp.anneal()?,
        Command::Sa => exp.sa()?,
        Command::Report => {
            let report = exp.report()?;
            return Ok(json!({
                "stage": "report",
                "config_hash": exp.hash(),
                "dir": exp.out_dir().join("report"),
                "tables": report.tables.iter().map(|t| &t.name).collect::<Vec<_>>(),
                "warnings": report.warnings.len(),
            }));
        }
        Command::LzDemo { .. } => unreachable!("handled above"),
    };
    Ok(json!({
        "stage": summary.stage,
        "config_hash": exp.hash(),
        "total": summary.total,
        "skipped": summary.skipped,
        "computed": summary.computed,
        "path": summary.path,
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", json!({ "error": "usage", "message": msg.trim() }));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
