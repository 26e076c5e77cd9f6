//! `qmi`: entropies and mutual-information measures from the command line.

mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Common;

#[derive(Parser)]
#[command(name = "qmi", version, about = "Shannon entropies and mutual information of few-particle states")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropies and information measures of one state
    Report(commands::ReportArgs),
    /// Measures of (n1, n2, n3) states over a range of n3
    ScanN3(commands::ScanN3Args),
    /// Measures of c1|A> + c2|B> over a grid of c1^2
    ScanSuperposition(commands::ScanSuperpositionArgs),
    /// Recompute the reference tables and compare cell by cell
    Tables(commands::TablesArgs),
    /// Sample a pair density on a regular grid
    DensityGrid(commands::DensityGridArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Mismatch(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Mismatch(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Mismatch(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<qmi::Error> for CliError {
    fn from(e: qmi::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = settings::Options::load(&cli.common).and_then(|options| match cli.command {
        Command::Report(args) => commands::report(options, args),
        Command::ScanN3(args) => commands::scan_n3(options, args),
        Command::ScanSuperposition(args) => commands::scan_superposition(options, args),
        Command::Tables(args) => commands::tables(options, args),
        Command::DensityGrid(args) => commands::density_grid(options, args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
