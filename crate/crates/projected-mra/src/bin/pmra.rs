//! Command-line front end for the benchmark harness: `run` executes a
//! noise sweep and writes trial records as CSV, `slope` fits a log-log
//! scaling exponent from a record file, and `summarize` aggregates a
//! record file into per-(noise level, method) statistics.
//!
//! Exit codes: 0 on success, 1 for configuration errors (bad flags or
//! invalid experiment parameters), 2 for runtime failures (I/O, malformed
//! input files, numerical breakdown).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use projected_mra::bench::{
    desk_preset, fit_scaling_slope, log_spaced, paper_preset, read_records_csv, run_experiment,
    summarize, summary_to_csv, ExperimentConfig, Method,
};
use projected_mra::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pmra",
    version,
    about = "Benchmark harness for signal recovery from projected cyclic shifts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a noise sweep and write one CSV record per (trial, method).
    Run(RunArgs),
    /// Fit the log-log slope of mean squared orbit error against noise.
    Slope(SlopeArgs),
    /// Aggregate records into per-(sigma, method) medians and write them.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// 10 noise levels, 20 trials: minutes of work.
    Desk,
    /// 20 noise levels, 100 trials: hours of work.
    Paper,
}

#[derive(Args)]
struct RunArgs {
    /// Signal length, odd and at least 7.
    #[arg(long)]
    p: Option<usize>,
    /// Observations per trial.
    #[arg(long)]
    n: Option<usize>,
    /// Smallest noise level.
    #[arg(long = "sigma-min")]
    sigma_min: Option<f64>,
    /// Largest noise level.
    #[arg(long = "sigma-max")]
    sigma_max: Option<f64>,
    /// Number of log-spaced noise levels.
    #[arg(long = "sigma-count")]
    sigma_count: Option<usize>,
    /// Monte Carlo repetitions per noise level.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of em, fit_T, fit_M, algorithm1.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Destination CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Baseline configuration; explicit flags override its fields.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

#[derive(Args)]
struct SlopeArgs {
    /// Record CSV produced by `run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Method whose records to fit: em, fit_T, fit_M, or algorithm1.
    #[arg(long)]
    method: String,
    /// Lower end of the noise range, inclusive.
    #[arg(long = "sigma-lo")]
    sigma_lo: f64,
    /// Upper end of the noise range, inclusive.
    #[arg(long = "sigma-hi")]
    sigma_hi: f64,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Record CSV produced by `run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Destination CSV path for the summary table.
    #[arg(long)]
    out: PathBuf,
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match args.preset {
        Some(PresetArg::Desk) => desk_preset(0, args.out.clone()),
        Some(PresetArg::Paper) => paper_preset(0, args.out.clone()),
        None => desk_preset(0, args.out.clone()),
    };
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(names) = args.methods {
        cfg.methods = names
            .iter()
            .map(|name| Method::parse(name))
            .collect::<Result<Vec<Method>>>()?;
    }
    if args.sigma_min.is_some() || args.sigma_max.is_some() || args.sigma_count.is_some() {
        let lo = args.sigma_min.unwrap_or(cfg.sigma_grid[0]);
        let hi = args.sigma_max.unwrap_or(*cfg.sigma_grid.last().unwrap());
        let count = args.sigma_count.unwrap_or(cfg.sigma_grid.len());
        if !(lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise range must be positive and finite, got [{lo}, {hi}]"
            )));
        }
        if count == 0 || (count > 1 && !(hi > lo)) {
            return Err(Error::InvalidConfig(format!(
                "need sigma-max > sigma-min for {count} levels, got [{lo}, {hi}]"
            )));
        }
        cfg.sigma_grid = log_spaced(lo, hi, count);
    }
    Ok(cfg)
}

fn run_command(args: RunArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let records = run_experiment(&cfg)?;
    println!(
        "wrote {} records to {}",
        records.len(),
        cfg.output_path.display()
    );
    Ok(())
}

fn slope_command(args: SlopeArgs) -> Result<()> {
    let method = Method::parse(&args.method)?;
    let records = read_records_csv(&args.input)?;
    let slope = fit_scaling_slope(&records, method, args.sigma_lo, args.sigma_hi)?;
    println!("{slope}");
    Ok(())
}

fn summarize_command(args: SummarizeArgs) -> Result<()> {
    let records = read_records_csv(&args.input)?;
    let rows = summarize(&records);
    std::fs::write(&args.out, summary_to_csv(&rows))?;
    println!("wrote {} summary rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::TooFewSigmaLevels { .. } | Error::EmptySelection => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Slope(args) => slope_command(args),
        Command::Summarize(args) => summarize_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
