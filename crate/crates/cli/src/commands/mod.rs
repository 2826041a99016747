mod analyze;
mod calibrate;
mod pe_audit;
mod simulate;

use std::path::Path;

pub use analyze::{analyze, AnalyzeArgs};
pub use calibrate::{calibrate, CalibrateArgs, Calibration};
pub use pe_audit::{pe_audit, PeAuditArgs, WindowResult};
pub use simulate::{simulate, SimulateArgs, SimulateOutcome};

use crate::analysis::AnalysisError;
use crate::error::{CliError, CliResult};

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::write(path, e))
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::write(path, e))
}

fn analysis_error(path: &Path, e: AnalysisError) -> CliError {
    match e {
        AnalysisError::NotHurwitz(e) => CliError::NotHurwitz(e.to_string()),
        AnalysisError::Config(e) => CliError::config(path, e),
    }
}
