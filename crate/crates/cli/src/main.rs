#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coopkin::commands::{
    analyze, calibrate, pe_audit, simulate, AnalyzeArgs, CalibrateArgs, PeAuditArgs, SimulateArgs,
};
use coopkin::CliResult;

#[derive(Parser)]
#[command(name = "coopkin", version, about = "Self-tuning control of two cooperating manipulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write logs, a manifest and the stability report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also run without adaptation and compare tracking RMS.
        #[arg(long)]
        no_adapt: bool,
    },
    /// Estimate the grasp pose offline from a twist log.
    Calibrate {
        #[arg(long)]
        log: PathBuf,
        /// Scenario or `[estimators]` file with the estimator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print the stability margins of a scenario.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check persistent excitation of a twist log window by window.
    PeAudit {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 2000)]
        window: usize,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
    },
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate { config, out, seed, no_adapt } => {
            simulate(&SimulateArgs { config, out, seed, no_adapt }).map(drop)
        }
        Command::Calibrate { log, config, out, threshold } => {
            calibrate(&CalibrateArgs { log, config, out, threshold }).map(drop)
        }
        Command::Analyze { config, seed, out } => analyze(&AnalyzeArgs { config, seed, out }).map(drop),
        Command::PeAudit { log, window, threshold } => pe_audit(&PeAuditArgs { log, window, threshold }).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
