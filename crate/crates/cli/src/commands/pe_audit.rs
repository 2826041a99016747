use std::path::PathBuf;

use coopkin_core::estimation::pe_matrix;
use coopkin_core::Vec3;

use crate::error::{CliError, CliResult};
use crate::logs::read_twist_log_file;

#[derive(Debug, Clone)]
pub struct PeAuditArgs {
    pub log: PathBuf,
    pub window: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    pub lambda_min: f64,
    pub pass: bool,
}

/// Splits the log's `ω₂` samples into consecutive windows of `window`
/// samples. A trailing partial window is dropped; a log shorter than one
/// window is audited as a single truncated window.
pub fn window_results(t: &[f64], w2: &[Vec3], window: usize, threshold: f64) -> (Vec<WindowResult>, bool) {
    let truncated = w2.len() < window;
    let size = if truncated { w2.len() } else { window };
    let results = w2
        .chunks_exact(size.max(1))
        .enumerate()
        .map(|(k, chunk)| {
            let lambda_min = pe_matrix(chunk.iter()).symmetric_eigenvalues().min();
            WindowResult {
                index: k,
                t_start: t[k * size],
                t_end: t[k * size + chunk.len() - 1],
                samples: chunk.len(),
                lambda_min,
                pass: lambda_min >= threshold,
            }
        })
        .collect();
    (results, truncated)
}

/// Exit status 0 when every window passes, 4 otherwise.
pub fn pe_audit(args: &PeAuditArgs) -> CliResult<Vec<WindowResult>> {
    if args.window == 0 {
        return Err(CliError::Input { path: args.log.clone(), message: "--window must be positive".into() });
    }
    if !(args.threshold > 0.0) || !args.threshold.is_finite() {
        return Err(CliError::Input { path: args.log.clone(), message: "--threshold must be positive".into() });
    }
    let log = read_twist_log_file(&args.log)?;
    let t: Vec<f64> = log.iter().map(|s| s.t).collect();
    let w2: Vec<Vec3> = log.iter().map(|s| s.twist2.angular).collect();
    let (results, truncated) = window_results(&t, &w2, args.window, args.threshold);
    if truncated {
        eprintln!(
            "warning: log has {} samples, fewer than the window of {}; auditing one truncated window",
            w2.len(),
            args.window
        );
    }
    println!("window,t_start,t_end,samples,lambda_min,verdict");
    for r in &results {
        println!(
            "{},{:.6},{:.6},{},{:.6e},{}",
            r.index,
            r.t_start,
            r.t_end,
            r.samples,
            r.lambda_min,
            if r.pass { "pass" } else { "fail" }
        );
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        println!("verdict: persistently exciting ({} windows, threshold {})", results.len(), args.threshold);
        Ok(results)
    } else {
        println!("verdict: not persistently exciting ({failed} of {} windows below {})", results.len(), args.threshold);
        Err(CliError::NotIdentifiable(format!("{failed} of {} windows fail the excitation test", results.len())))
    }
}
