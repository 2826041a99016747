use std::path::{Path, PathBuf};

use coopkin_core::estimation::{pe_matrix, AttitudeEstimator, DisplacementEstimator};
use coopkin_core::rigidmotion::UnitQuaternion;
use coopkin_core::{Error, Mat3, Mat4, Vec3};
use serde::{Deserialize, Serialize};

use super::{create_dir, write_file};
use crate::config::{EstimatorsSection, Scenario};
use crate::error::{CliError, CliResult};
use crate::logs::{read_twist_log_file, TwistSample};

#[derive(Debug, Clone)]
pub struct CalibrateArgs {
    pub log: PathBuf,
    /// A full scenario or a file holding only an `[estimators]` table.
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub samples: usize,
    pub sample_interval: f64,
    pub eta_hat: [f64; 4],
    pub rho_hat: [f64; 3],
    pub angular_residual_rms: f64,
    pub linear_residual_rms: f64,
    pub pe_lambda_min: f64,
    pub pe_threshold: f64,
    pub degenerate: bool,
    pub skipped_updates: usize,
    pub identifiable: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorsOnly {
    estimators: EstimatorsSection,
}

fn load_settings(path: &Path) -> CliResult<EstimatorsSection> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    if let Ok(only) = toml::from_str::<EstimatorsOnly>(&text) {
        return Ok(only.estimators);
    }
    Ok(Scenario::parse(&text, path)?.estimators)
}

/// Runs the cascaded estimators over a twist log. `Γ` starts at zero, so
/// the attitude estimate carries no prior; `ρ̂` starts at zero.
pub fn run_calibration(log: &[TwistSample], settings: &EstimatorsSection, path: &Path) -> CliResult<Calibration> {
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let h = match settings.sample_interval {
        Some(h) => h,
        None if log.len() >= 2 => (log[log.len() - 1].t - log[0].t) / (log.len() - 1) as f64,
        None => return Err(bad("need at least two samples to infer the sample interval".into())),
    };
    let cfg = |e: Error| CliError::config(path, e);
    let mut attitude =
        AttitudeEstimator::with_gamma(Mat4::zeros(), UnitQuaternion::identity(), settings.mu_attitude, h)
            .map_err(cfg)?;
    let mut displacement = DisplacementEstimator::new(
        Vec3::zeros(),
        Mat3::identity() * settings.p0_scale,
        settings.mu_displacement,
        h,
    )
    .map_err(cfg)?;
    let mut skipped = 0;
    for s in log {
        attitude.update(&s.twist1.angular, &s.twist2.angular);
        match displacement.update(&attitude.eta_hat(), &s.twist1.linear, &s.twist2.linear, &s.twist2.angular) {
            Ok(()) => {}
            Err(Error::IllConditioned { .. }) => skipped += 1,
            Err(e) => return Err(bad(e.to_string())),
        }
    }
    let eta = attitude.eta_hat();
    let rho = displacement.rho_hat();
    let a = eta.rotation_matrix();
    let n = log.len() as f64;
    let (mut sw, mut sv) = (0.0, 0.0);
    for s in log {
        let (t1, t2) = (&s.twist1, &s.twist2);
        sw += (t2.angular - a * t1.angular).norm_squared();
        sv += (t2.linear - a * t1.linear - t2.angular.cross(&rho)).norm_squared();
    }
    let pe_lambda_min = pe_matrix(log.iter().map(|s| &s.twist2.angular)).symmetric_eigenvalues().min();
    let degenerate = attitude.is_degenerate();
    Ok(Calibration {
        samples: log.len(),
        sample_interval: h,
        eta_hat: eta.to_vector4().into(),
        rho_hat: rho.into(),
        angular_residual_rms: (sw / n).sqrt(),
        linear_residual_rms: (sv / n).sqrt(),
        pe_lambda_min,
        pe_threshold: settings.pe_threshold,
        degenerate,
        skipped_updates: skipped,
        identifiable: pe_lambda_min >= settings.pe_threshold && !degenerate,
    })
}

impl Calibration {
    pub fn to_text(&self) -> String {
        let v = |xs: &[f64]| xs.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s += &format!("samples: {}\n", self.samples);
        s += &format!("sample_interval: {:.16e}\n", self.sample_interval);
        s += &format!("eta_hat: [{}]\n", v(&self.eta_hat));
        s += &format!("rho_hat: [{}]\n", v(&self.rho_hat));
        s += &format!("angular_residual_rms: {:.16e}\n", self.angular_residual_rms);
        s += &format!("linear_residual_rms: {:.16e}\n", self.linear_residual_rms);
        s += &format!("pe_lambda_min: {:.16e}\n", self.pe_lambda_min);
        s += &format!("pe_threshold: {:.16e}\n", self.pe_threshold);
        s += &format!("degenerate: {}\n", self.degenerate);
        s += &format!("skipped_updates: {}\n", self.skipped_updates);
        s += &format!("verdict: {}\n", if self.identifiable { "identifiable" } else { "non-identifiable" });
        s
    }
}

/// Prints the estimates and writes `calibration_report.{txt,json}` to
/// `out` (default: the log's directory). A negative excitation verdict is
/// returned as [`CliError::NotIdentifiable`] after the report is written.
pub fn calibrate(args: &CalibrateArgs) -> CliResult<Calibration> {
    let mut settings = match &args.config {
        Some(p) => load_settings(p)?,
        None => EstimatorsSection::default(),
    };
    if let Some(th) = args.threshold {
        if !(th > 0.0) || !th.is_finite() {
            return Err(CliError::Input { path: args.log.clone(), message: "--threshold must be positive".into() });
        }
        settings.pe_threshold = th;
    }
    let log = read_twist_log_file(&args.log)?;
    let cal = run_calibration(&log, &settings, &args.log)?;
    let text = cal.to_text();
    print!("{text}");
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.log.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    write_file(&dir.join("calibration_report.txt"), &text)?;
    write_file(
        &dir.join("calibration_report.json"),
        &serde_json::to_string_pretty(&cal).expect("calibration serializes"),
    )?;
    if !cal.identifiable {
        return Err(CliError::NotIdentifiable(format!(
            "lambda_min(Pi) = {:.3e} (threshold {}), degenerate spectrum: {}",
            cal.pe_lambda_min, cal.pe_threshold, cal.degenerate
        )));
    }
    Ok(cal)
}
