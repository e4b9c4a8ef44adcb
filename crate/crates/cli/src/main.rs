//! Benchmark CLI: run Monte-Carlo experiments from a config file, or run the
//! built-in validation suites.
//!
//! Exit codes: 0 success, 1 run/validation failure, 2 usage or config errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tm_pmbm::config::load_spec;
use tm_pmbm::experiment::{run_monte_carlo, FilterKind};
use tm_pmbm::report::write_experiment_outputs;
use tm_pmbm::validate::{all_passed, format_table, run_suites};

/// Multi-target tracking benchmark: PMBM/PMB filters on two-step trajectory
/// measurements, with point-measurement baselines.
#[derive(Parser)]
#[command(name = "tm-pmbm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Shorthand for the `validate` subcommand.
    #[arg(long, default_value_t = false)]
    validate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment described by a config file and write
    /// results.csv, summary.csv, hypotheses.csv and timing.csv.
    Run(RunArgs),
    /// Run the built-in oracle suites and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output directory for the CSV files.
    #[arg(long)]
    out: PathBuf,

    /// Override the number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<u32>,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the filter list (comma separated subset of
    /// tm-pmbm,tm-pmb,pmbm,pmb).
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<String>>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Force a suite failure to exercise the error path.
    #[arg(long, hide = true, default_value_t = false)]
    inject_fault: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match (cli.command, cli.validate) {
        (Some(Command::Run(args)), _) => run_command(args),
        (Some(Command::Validate(args)), _) => validate_command(args.inject_fault),
        (None, true) => validate_command(false),
        (None, false) => {
            eprintln!("error: expected a subcommand (`run` or `validate`); see --help");
            ExitCode::from(2)
        }
    }
}

fn run_command(args: RunArgs) -> ExitCode {
    // Thread-count override for the parallel Monte-Carlo runs.
    if let Ok(threads) = std::env::var("TM_PMBM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: TM_PMBM_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }

    let mut spec = match load_spec(&args.config) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(runs) = args.runs {
        spec.runs = runs;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(filters) = args.filters {
        match filters
            .iter()
            .map(|f| FilterKind::parse(f))
            .collect::<tm_pmbm::Result<Vec<_>>>()
        {
            Ok(parsed) => spec.filters = parsed,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if let Err(e) = spec.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    eprintln!(
        "running {} filters x {} sweep cells x {} runs on {} ...",
        spec.filters.len(),
        spec.cells().len(),
        spec.runs,
        spec.scenario.label()
    );
    let results = match run_monte_carlo(&spec) {
        Ok(results) => results,
        Err(e) => {
            eprintln!("error: experiment failed: {e}");
            return ExitCode::from(1);
        }
    };
    match write_experiment_outputs(&args.out, &results) {
        Ok(paths) => {
            for p in &paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            ExitCode::from(1)
        }
    }
}

fn validate_command(inject_fault: bool) -> ExitCode {
    let results = run_suites(inject_fault);
    print!("{}", format_table(&results));
    if all_passed(&results) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
