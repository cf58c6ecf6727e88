use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manifold_zo::bench::{bench, BenchSuite};
use manifold_zo::config::{load, ExperimentConfig};
use manifold_zo::diagnostics::{check_estimators, DiagnosticsSuite};
use manifold_zo::experiment::run_experiment;
use manifold_zo::{resolve_out_dir, HarnessError};

/// Zeroth-order Riemannian optimization experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver over a seed sweep and write traces plus a summary.
    Run(Common),
    /// Check the estimators' empirical moments against their bounds.
    CheckEstimators(Common),
    /// Time the estimator and subproblem kernels.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment description (JSON).
    config: PathBuf,
    /// Output directory; defaults to the config's, then $MANIFOLD_ZO_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(c) => {
            let cfg: ExperimentConfig = load(&c.config)?;
            let out = resolve_out_dir(c.out.as_deref(), cfg.output_dir.as_deref());
            let summary = run_experiment(&cfg, &out, c.jobs as usize)?;
            match summary.median_iters {
                Some(m) => println!("{}: median iterations to eps {m}", summary.name),
                None => println!("{}: {} of {} runs reached eps", summary.name, summary.reached_eps, summary.seeds),
            }
        }
        Command::CheckEstimators(c) => {
            let suite: DiagnosticsSuite = load(&c.config)?;
            let out = resolve_out_dir(c.out.as_deref(), suite.output_dir.as_deref());
            let report = check_estimators(&suite, &out)?;
            println!("{}: all {} checks passed", report.name, report.checks);
        }
        Command::Bench(c) => {
            let suite: BenchSuite = load(&c.config)?;
            let out = resolve_out_dir(c.out.as_deref(), suite.output_dir.as_deref());
            let report = bench(&suite, &out)?;
            println!("{}: timed {} kernels", report.name, report.timings.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
