//! `gnogo`: command-line front end for the Gaussian channel toolkit.
//!
//! Exit status: 0 on success, 1 when a code beats the channel or a stage
//! crashes, 2 on usage errors.

mod commands;
mod output;
mod spec;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::RangedU64ValueParser;
use clap::{Parser, Subcommand};
use nogo_core::search::{SearchMethod, DEFAULT_N_MAX};
use nogo_core::sweep::{parse_grid, Family, SweepConfig, SWEEP_R};

use crate::commands::{Report, SearchArgs, SweepArgs, VerifyArgs};
use crate::spec::ChannelSpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) | CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid).map_err(|e| e.to_string())
}

fn modes_arg() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(1..=DEFAULT_N_MAX as u64)
}

fn budget_arg() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(1..)
}

#[derive(Debug, Parser)]
#[command(name = "gnogo", version, about = "Entanglement degradation of Gaussian channels and codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form entanglement degradation, log-negativity and capacity bound.
    Degradation {
        /// e.g. attenuation:0.5, classical-noise:2.0, measure-prepare, file:ch.json
        #[arg(long, value_name = "SPEC")]
        channel: ChannelSpec,
    },
    /// Closed form, finite squeezing, teleportation and code search in one report.
    Verify {
        #[arg(long, value_name = "SPEC")]
        channel: ChannelSpec,
        /// Squeezing of the finite-r Choi state.
        #[arg(long, default_value_t = SWEEP_R)]
        r: f64,
        #[arg(long, default_value_t = 2, value_parser = modes_arg())]
        n: usize,
        #[arg(long, default_value_t = 2000, value_parser = budget_arg())]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SearchMethod::NelderMeadMultistart)]
        method: SearchMethod,
    },
    /// Tabulate D over a family parameter grid into a CSV file.
    Sweep {
        /// attenuation, amplification (parameter eta) or classical-noise (parameter det N).
        #[arg(long)]
        family: Family,
        /// start:stop:step (inclusive) or a comma list.
        #[arg(long, value_parser = grid_arg)]
        grid: Grid,
        /// Defaults to sweep-<family>.csv in $GNOGO_OUT_DIR or the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = SWEEP_R)]
        r: f64,
        #[arg(long, default_value_t = 2, value_parser = modes_arg())]
        n: usize,
        #[arg(long, default_value_t = 200, value_parser = budget_arg())]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SearchMethod::Random)]
        method: SearchMethod,
    },
    /// Teleport through the channel's Choi state and compare with the channel.
    #[command(name = "lemma1-check")]
    Lemma1Check {
        #[arg(long, value_name = "SPEC")]
        channel: ChannelSpec,
        #[arg(long, default_value_t = SWEEP_R)]
        r: f64,
    },
    /// Gaussian error-correcting code utilities.
    Gecc {
        #[command(subcommand)]
        action: GeccAction,
    },
    /// Search for a code that lowers D (none should exist).
    #[command(name = "nogo-search")]
    NogoSearch {
        #[arg(long, value_name = "SPEC")]
        channel: ChannelSpec,
        #[arg(long, default_value_t = 2, value_parser = modes_arg())]
        n: usize,
        #[arg(long, default_value_t = 2000, value_parser = budget_arg())]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SearchMethod::NelderMeadMultistart)]
        method: SearchMethod,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum GeccAction {
    /// Effective channel and D of a code read from JSON {"n", "S_E", "S_D"}.
    Eval {
        #[arg(long)]
        code: PathBuf,
        #[arg(long, value_name = "SPEC")]
        channel: ChannelSpec,
    },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Degradation { channel } => commands::degradation(&channel),
        Command::Verify {
            channel,
            r,
            n,
            budget,
            seed,
            method,
        } => commands::verify(
            &channel,
            &VerifyArgs {
                r,
                n,
                budget,
                seed,
                method,
            },
        ),
        Command::Sweep {
            family,
            grid,
            out,
            r,
            n,
            budget,
            seed,
            method,
        } => {
            if !(r.is_finite() && r >= 0.0) {
                return Err(CliError::Usage(format!("--r must be a finite squeezing >= 0, got {r}")));
            }
            commands::sweep(&SweepArgs {
                family,
                grid: &grid.0,
                out: out.as_deref(),
                config: SweepConfig {
                    n,
                    budget,
                    seed,
                    method,
                    r,
                    ..Default::default()
                },
            })
        }
        Command::Lemma1Check { channel, r } => commands::lemma1(&channel, r),
        Command::Gecc {
            action: GeccAction::Eval { code, channel },
        } => commands::gecc_eval(&code, &channel),
        Command::NogoSearch {
            channel,
            n,
            budget,
            seed,
            method,
            out,
        } => commands::nogo_search(
            &channel,
            &SearchArgs {
                n,
                budget,
                seed,
                method,
                out: out.as_deref(),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            let mut out = io::stdout().lock();
            // a closed pipe (e.g. `| head`) is not an error
            if let Err(e) = writeln!(out, "{}", output::to_pretty(&report.json)) {
                if e.kind() != io::ErrorKind::BrokenPipe {
                    eprintln!("gnogo: cannot write report: {e}");
                    return ExitCode::from(1);
                }
            }
            if report.failed {
                eprintln!("gnogo: violation or failed stage, see report");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("gnogo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["gnogo", "nogo-search", "--channel", "attenuation:0.7", "--method", "random"]).unwrap();
        match cli.command {
            Command::NogoSearch { n, budget, method, .. } => {
                assert_eq!((n, budget, method), (2, 2000, SearchMethod::Random));
            }
            other => panic!("{other:?}"),
        }
        for bad in [
            vec!["gnogo", "degradation", "--channel", "attenuation:1.5"],
            vec!["gnogo", "sweep", "--family", "attenuation", "--grid", ""],
            vec!["gnogo", "nogo-search", "--channel", "attenuation:0.5", "--n", "5"],
            vec!["gnogo", "nogo-search", "--channel", "attenuation:0.5", "--budget", "0"],
        ] {
            let err = Cli::try_parse_from(&bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad:?}");
        }
    }
}
