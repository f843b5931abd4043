use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oob_harness::output::write_outputs;
use oob_harness::{run_experiment_with, sweep_j_rho, Experiment, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "oobcov", version, about = "Out-of-band aided mmWave covariance estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single field, e.g. `--set run.trials=50`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Output CSV path (defaults to `run.output`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimated cluster count versus angular separation.
    Fig4ClusterCount(Common),
    /// Translation efficiency versus angular separation.
    Fig5EtaSeparation(Common),
    /// Efficiency of translation, DCOMP and LW-DCOMP versus distance.
    Fig6EtaDistance(Common),
    /// Effective rate versus distance.
    Fig7RateDistance(Common),
    /// Effective rate versus number of training snapshots.
    Fig7bRateSnapshots(Common),
    /// SNR loss under covariance perturbation and its bounds.
    Fig8SnrBound(Common),
    /// Every experiment, one CSV per experiment next to `--output`.
    All(Common),
    /// Parse and validate a configuration, then print it in full.
    ValidateConfig(Common),
    /// Mean LW-DCOMP efficiency for each prior threshold candidate.
    SweepJrho {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.7, 0.8, 0.9, 0.95])]
        candidates: Vec<f64>,
    },
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
    let cfg = ExperimentConfig::load(c.config.as_deref(), &c.overrides)?;
    let out = c.output.clone().unwrap_or_else(|| PathBuf::from(&cfg.run.output));
    Ok((cfg, out))
}

fn run_one(cfg: &ExperimentConfig, exp: Experiment, out: &Path) -> Result<(), HarnessError> {
    eprintln!("{exp}: {} trials per point, seed {}", cfg.run.trials, cfg.run.seed);
    let rows = run_experiment_with(cfg, exp, &mut |r| {
        eprintln!("  {} {}={} {} = {:.5} +/- {:.5}", r.experiment, r.sweep_name, r.sweep_value, r.metric, r.mean, r.stderr)
    })?;
    write_outputs(out, exp.id(), cfg, &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn with_suffix(path: &Path, id: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{id}.{ext}"))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let single = |c: &Common, exp: Experiment| -> Result<(), HarnessError> {
        let (cfg, out) = load(c)?;
        run_one(&cfg, exp, &out)
    };
    match cli.command {
        Command::Fig4ClusterCount(c) => single(&c, Experiment::Fig4ClusterCount),
        Command::Fig5EtaSeparation(c) => single(&c, Experiment::Fig5EtaSeparation),
        Command::Fig6EtaDistance(c) => single(&c, Experiment::Fig6EtaDistance),
        Command::Fig7RateDistance(c) => single(&c, Experiment::Fig7RateDistance),
        Command::Fig7bRateSnapshots(c) => single(&c, Experiment::Fig7bRateSnapshots),
        Command::Fig8SnrBound(c) => single(&c, Experiment::Fig8SnrBound),
        Command::All(c) => {
            let (cfg, out) = load(&c)?;
            for exp in Experiment::ALL {
                run_one(&cfg, exp, &with_suffix(&out, exp.id()))?;
            }
            Ok(())
        }
        Command::ValidateConfig(c) => {
            let (cfg, _) = load(&c)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::SweepJrho { common, candidates } => {
            let (cfg, out) = load(&common)?;
            let (best, rows) = sweep_j_rho(&cfg, &candidates)?;
            for r in &rows {
                println!("j_rho={} eta_lw_dcomp={:.5} +/- {:.5}", r.sweep_value, r.mean, r.stderr);
            }
            println!("best j_rho={best}");
            if common.output.is_some() {
                write_outputs(&out, "sweep_j_rho", &cfg, &rows)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
