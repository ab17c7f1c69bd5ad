use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irs_secrecy::sim::{self, Experiment, RunOptions, SweepVariable};
use irs_secrecy::SchemeId;

/// Monte Carlo secrecy-rate simulations for IRS-aided beamforming.
#[derive(Debug, Parser)]
#[command(name = "irs-secrecy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a sweep and write raw.csv and summary.csv.
    Simulate {
        /// JSON experiment file (system keys plus an optional `sweep` object).
        #[arg(long)]
        config: PathBuf,
        /// Swept quantity: `pap` (transmit power in dBm) or `n` (IRS elements).
        #[arg(long, value_parser = parse_variable)]
        sweep: Option<SweepVariable>,
        /// Realizations per sweep value.
        #[arg(long)]
        trials: Option<usize>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated schemes: proposed, mrt_with_irs, without_irs, upper_bound.
        #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
        schemes: Option<Vec<SchemeId>>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Record wall-clock time per row (makes the raw CSV non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Summarize a raw CSV into per-point means and standard errors.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    s.parse().map_err(|e: irs_secrecy::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    s.trim().parse().map_err(|e: irs_secrecy::Error| e.to_string())
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Partial(usize),
}

impl From<irs_secrecy::Error> for Failure {
    fn from(e: irs_secrecy::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            config,
            sweep,
            trials,
            seed,
            schemes,
            out,
            timing,
        } => {
            let exp = Experiment::load(&config)?;
            let mut cfg = exp.system;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let mut spec = exp.sweep.to_spec(sweep)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(s) = schemes {
                spec.schemes = s;
            }
            spec.validate()?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))?;

            let rows = sim::run_sweep_with(
                &cfg,
                &spec,
                RunOptions {
                    record_wall_time: timing,
                },
            )?;
            let raw_path = out.join("raw.csv");
            let summary_path = out.join("summary.csv");
            sim::write_raw_csv(&rows, create(&raw_path)?)?;
            sim::write_summary_csv(&sim::aggregate(&rows)?, create(&summary_path)?)?;
            println!("wrote {} rows to {}", rows.len(), raw_path.display());
            println!("wrote summary to {}", summary_path.display());

            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                return Err(Failure::Partial(failed));
            }
            Ok(())
        }
        Command::Aggregate { input, out } => {
            let file = File::open(&input)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
            let rows = sim::read_raw_csv(file)?;
            let summary = sim::aggregate(&rows)?;
            sim::write_summary_csv(&summary, create(&out)?)?;
            println!("wrote {} summary rows to {}", summary.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(n)) => {
            eprintln!("error: {n} row(s) failed; see the status column");
            ExitCode::from(2)
        }
    }
}
