//! `frachill` — runs, checks, refinement studies, and contraction probes
//! for the fractional Cahn–Hilliard tumor-growth solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 check failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frachill::config::RunConfig;
use frachill::driver;
use frachill::harness::CheckStatus;
use frachill::Error;

#[derive(Parser)]
#[command(name = "frachill", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Path to the `key = value` run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `out.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation and write series.csv plus snapshots.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run and evaluate the standard checks, appending checks.csv.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Cauchy-difference study over halved step sizes.
    StudyH {
        #[command(flatten)]
        common: Common,
        /// Number of refinement levels (h, h/2, …).
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Cauchy-difference study over halved Yosida levels.
    StudyLambda {
        #[command(flatten)]
        common: Common,
        /// Number of λ levels (λ, λ/2, …).
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Pairwise contraction probe of the fixed-point map.
    ProbeContraction {
        #[command(flatten)]
        common: Common,
        /// Number of random pairs.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        /// Seed of the probe fields.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io(_) => 2,
        Error::Solver { .. } => 3,
        Error::Check(_) => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { common } => {
            let cfg = RunConfig::parse_file(&common.config)?;
            let dir = driver::cmd_run(&cfg, common.out.as_deref())?;
            println!("run complete: {}", dir.join("series.csv").display());
            Ok(())
        }
        Command::Check { common } => {
            let cfg = RunConfig::parse_file(&common.config)?;
            let lines = driver::cmd_check(&cfg, common.out.as_deref())?;
            let mut failed = 0usize;
            for line in &lines {
                match &line.status {
                    CheckStatus::Skipped(reason) => {
                        println!("{:<28} skipped ({reason})", line.name);
                    }
                    status => {
                        println!(
                            "{:<28} {} (value {:.3e}, threshold {:.3e})",
                            line.name,
                            status.as_str(),
                            line.value,
                            line.threshold
                        );
                        if *status == CheckStatus::Fail {
                            failed += 1;
                        }
                    }
                }
            }
            if failed > 0 {
                return Err(Error::Check(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
        Command::StudyH { common, levels } => {
            let cfg = RunConfig::parse_file(&common.config)?;
            let study = driver::cmd_study_h(&cfg, levels, common.out.as_deref())?;
            for row in &study.rows {
                match (row.diff_l2, row.order) {
                    (Some(d), Some(p)) => {
                        println!("level {} h={:.3e} diff={d:.6e} order={p:.3}", row.level, row.h)
                    }
                    (Some(d), None) => {
                        println!("level {} h={:.3e} diff={d:.6e}", row.level, row.h)
                    }
                    _ => println!("level {} h={:.3e}", row.level, row.h),
                }
            }
            Ok(())
        }
        Command::StudyLambda { common, levels } => {
            let cfg = RunConfig::parse_file(&common.config)?;
            let study = driver::cmd_study_lambda(&cfg, levels, common.out.as_deref())?;
            for row in &study.rows {
                match row.diff_l2 {
                    Some(d) => println!(
                        "lambda {:.4e} diff={d:.6e} overshoot={:.3e} violation={:.3e}",
                        row.lambda, row.overshoot, row.violation
                    ),
                    None => println!(
                        "lambda {:.4e} overshoot={:.3e} violation={:.3e}",
                        row.lambda, row.overshoot, row.violation
                    ),
                }
            }
            Ok(())
        }
        Command::ProbeContraction {
            common,
            pairs,
            seed,
        } => {
            let cfg = RunConfig::parse_file(&common.config)?;
            let probe = driver::cmd_probe_contraction(&cfg, pairs, seed, common.out.as_deref())?;
            for (pair, ratio) in probe.ratios.iter().enumerate() {
                println!("pair {pair}: ratio {ratio:.6e}");
            }
            println!("K_hat = {:.6e}", probe.k_hat);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
