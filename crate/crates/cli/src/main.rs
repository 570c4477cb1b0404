//! `walsh-schema`: exact one-generation schema averages from the command line.

mod commands;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use walsh_schema::{Error, Exact, Mode};

use commands::Report;
use output::{sink, Format};

#[derive(Debug, Parser)]
#[command(
    name = "walsh-schema",
    version,
    about = "Exact schema averages of the simple GA via the Walsh basis"
)]
struct Cli {
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reproduce the five-string worked example and check it against stored values.
    Example,
    /// Schema averages of a population file, optionally after selection.
    SchemaAvg {
        #[arg(long)]
        pop: PathBuf,
        /// Fixed-position mask, highest position first.
        #[arg(long)]
        u: String,
        /// Fitness spec; when given, report selection-weighted averages.
        #[arg(long)]
        fitness: Option<String>,
        #[arg(long, value_parser = parse_mode, default_value = "rational")]
        mode: Mode,
    },
    /// One generation of expected schema averages with the schema-theorem bound.
    Step {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's mode.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Expected schema averages for generations 0..=N.
    Trajectory {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `generations`.
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Random instances checked against the full-space oracle and the bound.
    Validate {
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..=12))]
        ell: u32,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sampled next generations compared with the exact expectation.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `replicates`.
        #[arg(long)]
        replicates: Option<usize>,
        /// Defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "rational" => Ok(Mode::Rational),
        "float" => Ok(Mode::Float),
        _ => Err(format!("unknown mode {s:?}, expected rational or float")),
    }
}

enum Failure {
    Mismatch,
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = sink(out)?;
    report.table.write(format, &mut w)?;
    w.flush()?;
    if report.ok {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    let report = match &cli.command {
        Command::Example => commands::example()?,
        Command::SchemaAvg {
            pop,
            u,
            fitness,
            mode,
        } => match mode {
            Mode::Rational => commands::schema_avg::<Exact>(pop, u, fitness.as_deref())?,
            Mode::Float => commands::schema_avg::<f64>(pop, u, fitness.as_deref())?,
        },
        Command::Step { config, mode } => {
            let exp = commands::load(config)?;
            match mode.unwrap_or(exp.ga.mode) {
                Mode::Rational => commands::step::<Exact>(&exp)?,
                Mode::Float => commands::step::<f64>(&exp)?,
            }
        }
        Command::Trajectory {
            config,
            generations,
        } => {
            let exp = commands::load(config)?;
            let n = generations.unwrap_or(exp.config.generations);
            match exp.ga.mode {
                Mode::Rational => commands::trajectory_cmd::<Exact>(&exp, n)?,
                Mode::Float => commands::trajectory_cmd::<f64>(&exp, n)?,
            }
        }
        Command::Validate { ell, trials, seed } => {
            let (report, table) = commands::validate(*ell, *trials, *seed)?;
            let mut w = sink(out)?;
            match cli.format {
                Format::Csv => {
                    writeln!(
                        w,
                        "{}/{} oracle matches",
                        report.oracle_matches, report.trials
                    )?;
                    writeln!(
                        w,
                        "{}/{} float matches (max abs diff {:e})",
                        report.float_matches, report.trials, report.max_float_diff
                    )?;
                    writeln!(w, "{}/{} bound checks", report.bound_checks, report.trials)?;
                }
                Format::Json => table.write(Format::Json, &mut w)?,
            }
            w.flush()?;
            return if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Mismatch)
            };
        }
        Command::Montecarlo {
            config,
            replicates,
            seed,
        } => {
            let exp = commands::load(config)?;
            let r = replicates.unwrap_or(exp.config.replicates);
            let s = seed.unwrap_or(exp.config.seed);
            commands::montecarlo(&exp, r, s)?
        }
    };
    emit(&report, cli.format, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => {
            eprintln!("error: results differ from the expected values");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalContract(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
