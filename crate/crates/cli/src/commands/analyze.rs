use std::path::PathBuf;

use super::{analysis_error, create_dir, write_file};
use crate::analysis::{analyze as run_analysis, Analysis};
use crate::config::Scenario;
use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct AnalyzeArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Prints the stability report; with `out`, also writes
/// `stability_report.txt` and `stability_report.json` there.
pub fn analyze(args: &AnalyzeArgs) -> CliResult<Analysis> {
    let mut scenario = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.run.seed = seed;
    }
    let analysis = run_analysis(&scenario).map_err(|e| analysis_error(&args.config, e))?;
    let text = analysis.to_text();
    print!("{text}");
    if analysis.fallback_used() {
        let note = format!(
            "note: kappa2 = 0, so r_z = kappa0/kappa2 is undefined; using the configured fallback r_z = {}",
            scenario.analysis.r_z_fallback
        );
        println!("{note}");
        eprintln!("{note}");
    }
    let verdict = if analysis.report.admissible { "satisfied" } else { "violated" };
    println!(
        "initial parameter error {:.6e} vs admissible bound {:.6e}: {verdict}",
        analysis.initial_parameter_error, analysis.report.r_theta_bound
    );
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("stability_report.txt"), &text)?;
        write_file(&dir.join("stability_report.json"), &analysis.to_json())?;
    }
    Ok(analysis)
}
