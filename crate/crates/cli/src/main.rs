//! `recbayes` — simulate state-estimation scenarios, run filters over
//! them, and execute the cross-check validation suites.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Parser, Subcommand};

use recbayes::sim::{compare_filters, run_filter, simulate};
use recbayes_cli::config::ConfigDoc;
use recbayes_cli::report::{write_reports, write_trajectory};
use recbayes_cli::validate::run_suite;
use recbayes_cli::{CliError, ExitCode};

#[derive(Parser)]
#[command(name = "recbayes", version, about = "Recursive-Bayes filter simulator")]
struct Cli {
    /// Suppress informational output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out ground truth and noisy measurements to a CSV table.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one filter over a simulated scenario and write the report table.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's filter selection.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Run several filters against one shared trajectory.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Restrict the comparison to a single filter.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Run a named cross-check suite and exit 0 iff every check passes.
    Validate {
        #[arg(long)]
        suite: String,
    },
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ProcessExit::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ProcessExit::from(e.code as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Simulate { config, out, seed } => {
            let doc = ConfigDoc::load(config)?;
            let scenario = doc.to_scenario(*seed)?;
            let trajectory = simulate(&scenario)?;
            let mut w = BufWriter::new(File::create(out)?);
            write_trajectory(&mut w, &trajectory)?;
            w.flush()?;
            if !cli.quiet {
                println!("wrote {} truth rows to {}", trajectory.truth.len(), out.display());
            }
            Ok(ExitCode::Success)
        }
        Command::Run { config, out, seed, filter } => {
            let doc = ConfigDoc::load(config)?;
            let scenario = doc.to_scenario(*seed)?;
            let kind = doc.filter_kind(filter.as_deref())?;
            let cfg = doc.iteration_config()?;
            let trajectory = simulate(&scenario)?;
            let report = run_filter(kind, &scenario, &trajectory, &cfg)?;
            let mut w = BufWriter::new(File::create(out)?);
            write_reports(&mut w, std::slice::from_ref(&report))?;
            w.flush()?;
            if !cli.quiet {
                println!(
                    "{}: rmse_norm={:.6e} mean_nees={:.4} mean_iterations={:.2}",
                    kind,
                    report.rmse_norm(),
                    report.mean_nees,
                    report.mean_iterations
                );
            }
            Ok(ExitCode::Success)
        }
        Command::Compare { config, out, seed, filter } => {
            let doc = ConfigDoc::load(config)?;
            let scenario = doc.to_scenario(*seed)?;
            let kinds = doc.filter_kinds(filter.as_deref())?;
            let cfg = doc.iteration_config()?;
            let reports = compare_filters(&kinds, &scenario, &cfg)?;
            let mut w = BufWriter::new(File::create(out)?);
            write_reports(&mut w, &reports)?;
            w.flush()?;
            if !cli.quiet {
                for r in &reports {
                    println!(
                        "{}: rmse_norm={:.6e} mean_nees={:.4} mean_iterations={:.2}",
                        r.filter,
                        r.rmse_norm(),
                        r.mean_nees,
                        r.mean_iterations
                    );
                }
            }
            Ok(ExitCode::Success)
        }
        Command::Validate { suite } => {
            let report = run_suite(suite)?;
            for c in &report.checks {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                let line = format!(
                    "[{status}] {}: margin {:.3e} (threshold {:.1e})",
                    c.name, c.margin, c.threshold
                );
                if c.passed() {
                    if !cli.quiet {
                        println!("{line}");
                    }
                } else {
                    println!("{line}");
                }
            }
            if report.passed() {
                if !cli.quiet {
                    println!("suite {} passed", report.suite);
                }
                Ok(ExitCode::Success)
            } else {
                Ok(ExitCode::SuiteFailed)
            }
        }
    }
}
