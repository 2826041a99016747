use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use coopkin_core::sim::{run, SimError, SimLog};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{analysis_error, create_dir, write_file};
use crate::analysis::analyze;
use crate::config::Scenario;
use crate::error::{CliError, CliResult};
use crate::logs::{write_run_log, write_twist_log, TwistSample};

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub no_adapt: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutcome {
    pub records: usize,
    pub final_theta_err: f64,
    pub tracking_rms: f64,
    /// `(rms without adaptation, ratio)` for paired runs.
    pub comparison: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    seed: u64,
    config_sha256: String,
    completed: bool,
    outputs: Vec<String>,
}

/// Fraction of the run, counted from the end, over which tracking RMS is
/// reported.
pub const RMS_WINDOW_FRACTION: f64 = 0.25;

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_logs(dir: &Path, run_name: &str, twists_name: Option<&str>, log: &SimLog) -> CliResult<Vec<String>> {
    let mut written = Vec::new();
    let path = dir.join(run_name);
    let f = File::create(&path).map_err(|e| CliError::write(&path, e))?;
    write_run_log(BufWriter::new(f), &log.records).map_err(|e| CliError::write(&path, e))?;
    written.push(run_name.to_string());
    if let Some(name) = twists_name {
        let path = dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::write(&path, e))?;
        let rows: Vec<TwistSample> = log.records.iter().map(TwistSample::from).collect();
        write_twist_log(BufWriter::new(f), &rows).map_err(|e| CliError::write(&path, e))?;
        written.push(name.to_string());
    }
    Ok(written)
}

/// Runs the scenario and writes `run_log.csv`, `twists.csv`,
/// `stability_report.{txt,json}`, `config.resolved.toml` and
/// `manifest.json` into `out`. With `no_adapt` a second run without
/// adaptation is made in parallel and `run_log_no_adapt.csv` and
/// `comparison.txt` are added. A halted run still writes its partial log.
pub fn simulate(args: &SimulateArgs) -> CliResult<SimulateOutcome> {
    let mut scenario = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.run.seed = seed;
    }
    let analysis = analyze(&scenario).map_err(|e| analysis_error(&args.config, e))?;
    let adapted = scenario.sim_config(scenario.run.adaptation).map_err(|e| CliError::config(&args.config, e))?;
    let baseline = if args.no_adapt {
        Some(scenario.sim_config(false).map_err(|e| CliError::config(&args.config, e))?)
    } else {
        None
    };

    let (main, paired) = std::thread::scope(|s| {
        let paired = baseline.map(|cfg| s.spawn(move || run(cfg)));
        let main = run(adapted);
        (main, paired.map(|h| h.join().expect("simulation thread panicked")))
    });

    let dir = &args.out;
    create_dir(dir)?;
    let resolved = scenario.to_toml();
    write_file(&dir.join("config.resolved.toml"), &resolved)?;
    write_file(&dir.join("stability_report.txt"), &analysis.to_text())?;
    write_file(&dir.join("stability_report.json"), &analysis.to_json())?;
    let mut outputs: Vec<String> =
        ["config.resolved.toml", "stability_report.txt", "stability_report.json"].map(String::from).to_vec();

    let mut halt: Option<SimError> = None;
    let main_log = match main {
        Ok(log) => log,
        Err(e) => {
            let log = e.log.clone();
            halt = Some(e);
            log
        }
    };
    outputs.extend(write_logs(dir, "run_log.csv", Some("twists.csv"), &main_log)?);

    let window = scenario.trajectory.duration * RMS_WINDOW_FRACTION;
    let tracking_rms = main_log.tracking_rms(window);
    let mut comparison = None;
    if let Some(paired) = paired {
        let paired_log = match paired {
            Ok(log) => log,
            Err(e) => {
                let log = e.log.clone();
                halt.get_or_insert(e);
                log
            }
        };
        outputs.extend(write_logs(dir, "run_log_no_adapt.csv", None, &paired_log)?);
        let off = paired_log.tracking_rms(window);
        let ratio = off / tracking_rms;
        let text = format!(
            "window_seconds: {window:.16e}\n\
             tracking_rms_adaptive: {tracking_rms:.16e}\n\
             tracking_rms_no_adapt: {off:.16e}\n\
             rms_ratio: {ratio:.16e}\n"
        );
        write_file(&dir.join("comparison.txt"), &text)?;
        outputs.push("comparison.txt".into());
        print!("{text}");
        comparison = Some((off, ratio));
    }

    outputs.push("manifest.json".into());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: scenario.run.seed,
        config_sha256: sha256_hex(&resolved),
        completed: halt.is_none(),
        outputs,
    };
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;

    if let Some(e) = halt {
        return Err(match e.cause {
            coopkin_core::Error::NotHurwitz { .. } => CliError::NotHurwitz(e.to_string()),
            coopkin_core::Error::InvalidConfig(_) => CliError::config(&args.config, &e),
            _ => CliError::Runtime(e.to_string()),
        });
    }
    let last = main_log.last().expect("a completed run has records");
    println!("records: {}", main_log.records.len());
    println!("final_theta_err: {:.6e}", last.theta_err);
    println!("tracking_rms: {tracking_rms:.6e}");
    println!("admissible: {}", analysis.report.admissible);
    Ok(SimulateOutcome {
        records: main_log.records.len(),
        final_theta_err: last.theta_err,
        tracking_rms,
        comparison,
    })
}
