//! `heraldiq`: run heralded-state schemes, sweeps, source metrics,
//! calculators and circuit searches.

mod commands;
mod error;
mod output;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{calc, list, search, simulate, sources, sweep, tables};
use error::{CliError, CliResult};
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "heraldiq", version, about = "Exact simulation of heralded photonic entangled-state generation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Report format; tables and sweeps default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Seed for randomized steps (search restarts).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; a hint, defaults to all cores.
    #[arg(long, global = true, env = "HERALDIQ_THREADS", hide_env_values = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scheme and report success, per-pattern fidelities and false events.
    Simulate(simulate::SimulateArgs),
    /// Regenerate the scheme comparison tables.
    Tables(tables::TablesArgs),
    /// Tabulate a figure of merit over a parameter grid.
    Sweep(sweep::SweepArgs),
    /// Search for a circuit solving a problem file.
    Search(search::SearchArgs),
    /// Refine an existing scheme's circuit.
    Improve(search::ImproveArgs),
    /// Photon-pair source metrics.
    Sources(sources::SourcesArgs),
    /// Closed-form calculators.
    Calc(calc::CalcArgs),
    /// List built-in schemes and external scheme slots.
    List,
}

fn dispatch(cli: &Cli) -> CliResult<Option<CliError>> {
    let c = &cli.common;
    let (text, status) = match &cli.command {
        Command::Simulate(a) => (simulate::execute(a, c)?, None),
        Command::Tables(a) => (tables::execute(a, c)?, None),
        Command::Sweep(a) => (sweep::execute(a, c)?, None),
        Command::Search(a) => search::execute(a, c)?,
        Command::Improve(a) => (search::execute_improve(a, c)?, None),
        Command::Sources(a) => (sources::execute(a, c)?, None),
        Command::Calc(a) => (calc::execute(a, c)?, None),
        Command::List => (list::execute(c)?, None),
    };
    output::emit(&text, c.out.as_ref())?;
    Ok(status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.common.threads.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let failure = match dispatch(&cli) {
        Ok(status) => status,
        Err(e) => Some(e),
    };
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("heraldiq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
