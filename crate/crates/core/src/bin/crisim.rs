//! Command-line front end: run scenarios, synthesize traces, build reports
//! and sweep cheating intensities.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use crisim::engine::{run_scenario, ScenarioConfig, SimResult};
use crisim::report::write_report;
use crisim::sweep::intensity_sweep;
use crisim::trace::{synth_trace, write_trace, SynthSpec};
use crisim::Execution;

#[derive(Parser)]
#[command(
    name = "crisim",
    version,
    about = "Cheating-resilient crowdsensing incentive simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its result file
    Run {
        /// Scenario file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Override the configured seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },

    /// Generate a synthetic diurnal temperature trace as CSV
    SynthTrace {
        #[arg(long, default_value_t = 366)]
        users: u32,
        /// Seconds
        #[arg(long, default_value_t = 86_400)]
        horizon: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Mean seconds between a user's samples
        #[arg(long, default_value_t = SynthSpec::default().mean_interval)]
        mean_interval: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Compare a variant result against its baseline
    Report {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        variant: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },

    /// Run the baseline and one general-intensity variant per probability
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated cheat probabilities
        #[arg(long, value_delimiter = ',', default_value = "0.10,0.15,0.20")]
        intensities: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        /// Run scenarios one after another
        #[arg(long)]
        sequential: bool,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::from_toml_file(path)
        .with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let config = load_config(&config, seed)?;
            create_dir(&out)?;
            let result = run_scenario(&config)?;
            let file = out.join(format!("{}.json", result.label));
            result.write(&file)?;
            println!(
                "{}: {} tasks ({} skipped), mean REP {:.4}, mean PB {:.4}, mean TC {:.2} -> {}",
                result.label,
                result.outcomes.len(),
                result.skipped_tasks,
                result.mean_reputation(),
                result.mean_payback(),
                result.mean_task_count(),
                file.display()
            );
        }
        Command::SynthTrace {
            users,
            horizon,
            seed,
            mean_interval,
            out,
        } => {
            let spec = SynthSpec {
                users,
                mean_interval,
                ..SynthSpec::default()
            };
            let trace = synth_trace(&spec, horizon, seed)?;
            write_trace(&trace, &out)?;
            println!(
                "{} samples for {} users -> {}",
                trace.len(),
                trace.user_count(),
                out.display()
            );
        }
        Command::Report {
            baseline,
            variant,
            out,
        } => {
            let baseline = SimResult::read(&baseline)?;
            let variant = SimResult::read(&variant)?;
            let summaries = write_report(&out, &baseline, std::slice::from_ref(&variant))?;
            for s in summaries {
                println!(
                    "{} vs {}: DT disturbance {:.3}% ({:.3} C over {} tasks)",
                    s.variant,
                    s.baseline,
                    s.mean_dt_disturbance_pct,
                    s.mean_abs_dt_shift,
                    s.common_tasks
                );
            }
        }
        Command::Sweep {
            config,
            intensities,
            seed,
            out,
            sequential,
        } => {
            if intensities.iter().any(|p| !(0.0..=1.0).contains(p)) {
                bail!("intensities must lie in [0, 1]");
            }
            let config = load_config(&config, seed)?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let sweep = intensity_sweep(&config, &intensities, exec)?;
            create_dir(&out)?;
            for r in std::iter::once(&sweep.baseline).chain(&sweep.variants) {
                r.write(out.join(format!("{}.json", r.label)))?;
            }
            write_report(&out, &sweep.baseline, &sweep.variants)?;
            for s in &sweep.summaries {
                println!(
                    "{}: DT disturbance {:.3}%, REP {:+.2}%, PB {:+.2}%, TC {:+.2}%",
                    s.variant,
                    s.mean_dt_disturbance_pct,
                    s.population_rep.change_pct.unwrap_or(0.0),
                    s.population_pb.change_pct.unwrap_or(0.0),
                    s.population_tc.change_pct.unwrap_or(0.0),
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Some causes (TOML parse errors) span several lines.
            let message = format!("{e:#}");
            let message: Vec<&str> = message
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error: {}", message.join(" "));
            ExitCode::FAILURE
        }
    }
}
