//! Sampled constants, κ's and the stability report of a scenario, and their
//! text and JSON renderings.

use coopkin_core::stability::{
    estimate_constants, kappa_bounds, stability_report, BoundConstants, Kappas, OperatingRegion, RadiusSource,
    StabilityReport,
};
use serde::Serialize;

use crate::config::Scenario;

/// Everything `analyze` reports for one scenario.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub constants: BoundConstants,
    pub kappas: Kappas,
    pub report: StabilityReport,
    pub region: OperatingRegion,
    pub initial_parameter_error: f64,
    pub initial_tracking_error: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// Failure of the analysis pipeline, split by how the CLI reports it.
#[derive(Debug)]
pub enum AnalysisError {
    NotHurwitz(coopkin_core::Error),
    Config(coopkin_core::Error),
}

/// Seed of the constant sampler, derived from the run seed so that noise
/// and sampling use distinct streams.
pub fn sampling_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

pub fn analyze(s: &Scenario) -> Result<Analysis, AnalysisError> {
    let gains = s.gains().map_err(|e| match e {
        coopkin_core::Error::NotHurwitz { .. } => AnalysisError::NotHurwitz(e),
        other => AnalysisError::Config(other),
    })?;
    let cfg = AnalysisError::Config;
    let model = s.model().map_err(cfg)?;
    let theta = s.theta_true().map_err(cfg)?;
    let guess = s.theta_guess().map_err(cfg)?;
    let region = s.region().map_err(cfg)?;
    let bounds = s.reference_bounds().map_err(cfg)?;
    let a = &s.analysis;
    let mut constants = estimate_constants(&model, &theta, a.radius, &region, bounds, a.samples, sampling_seed(s.run.seed))
        .map_err(cfg)?;
    if let Some(eps) = a.eps_t {
        constants.eps_t = eps;
    }
    let kappas = kappa_bounds(&constants, gains.norm());
    let initial_parameter_error = theta.distance(&guess);
    let report =
        stability_report(&gains, &kappas, initial_parameter_error, a.alpha, Some(a.r_z_fallback)).map_err(|e| match e {
            coopkin_core::Error::NotHurwitz { .. } => AnalysisError::NotHurwitz(e),
            other => AnalysisError::Config(other),
        })?;
    let e0 = coopkin_core::Vec12::from(s.run.initial_error);
    Ok(Analysis {
        constants,
        kappas,
        report,
        region,
        initial_parameter_error,
        initial_tracking_error: e0.norm(),
        alpha: a.alpha,
        seed: s.run.seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub p_condition_number: f64,
    pub lyapunov_residual: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub sigma: f64,
    pub sigma0: f64,
    pub b: f64,
    pub r_z: f64,
    pub r_z_source: &'static str,
    pub r_theta: f64,
    pub r_theta_bound: f64,
    pub alpha: f64,
    pub initial_parameter_error: f64,
    pub initial_tracking_error: f64,
    pub max_initial_tracking_error: f64,
    pub sigma_positive: bool,
    pub admissible: bool,
    pub tracking_error_admissible: bool,
    pub constants: ConstantsDocument,
    pub region: RegionDocument,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsDocument {
    pub c_m: f64,
    pub c_big_m: f64,
    pub c_g: f64,
    pub c_h: f64,
    pub c_v: f64,
    pub c_a: f64,
    pub bar_c_m: f64,
    pub bar_c_big_m: f64,
    pub bar_c_g: f64,
    pub bar_c_h: f64,
    pub c_n: f64,
    pub c_t: f64,
    pub c_d: f64,
    pub c_lambda: f64,
    pub c_l: f64,
    pub eps_t: f64,
    pub eps_d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionDocument {
    pub pose_center: [f64; 6],
    pub pose_half_width: [f64; 6],
    pub max_speed: f64,
}

impl Analysis {
    pub fn document(&self) -> ReportDocument {
        let r = &self.report;
        let c = &self.constants;
        ReportDocument {
            lambda_min: r.lambda_min,
            lambda_max: r.lambda_max,
            p_condition_number: r.gamma,
            lyapunov_residual: r.residual,
            kappa0: r.kappas.kappa0,
            kappa1: r.kappas.kappa1,
            kappa2: r.kappas.kappa2,
            sigma: r.sigma,
            sigma0: r.sigma0,
            b: r.b,
            r_z: r.r_z,
            r_z_source: match r.r_z_source {
                RadiusSource::KappaRatio => "kappa-ratio",
                RadiusSource::Fallback => "fallback",
            },
            r_theta: r.r_theta,
            r_theta_bound: r.r_theta_bound,
            alpha: self.alpha,
            initial_parameter_error: self.initial_parameter_error,
            initial_tracking_error: self.initial_tracking_error,
            max_initial_tracking_error: r.max_initial_error(),
            sigma_positive: r.sigma_positive,
            admissible: r.admissible,
            tracking_error_admissible: self.initial_tracking_error <= r.max_initial_error(),
            constants: ConstantsDocument {
                c_m: c.c_m,
                c_big_m: c.c_big_m,
                c_g: c.c_g,
                c_h: c.c_h,
                c_v: c.c_v,
                c_a: c.c_a,
                bar_c_m: c.bar_c_m,
                bar_c_big_m: c.bar_c_big_m,
                bar_c_g: c.bar_c_g,
                bar_c_h: c.bar_c_h,
                c_n: c.c_n,
                c_t: c.c_t,
                c_d: c.c_d,
                c_lambda: c.c_lambda,
                c_l: c.c_l,
                eps_t: c.eps_t,
                eps_d: c.eps_d,
            },
            region: RegionDocument {
                pose_center: self.region.pose_center.into(),
                pose_half_width: self.region.pose_half_width.into(),
                max_speed: self.region.max_speed,
            },
        }
    }

    /// `key: value` lines; nested values are flattened with dotted keys.
    pub fn to_text(&self) -> String {
        let json = serde_json::to_value(self.document()).expect("report serializes");
        let mut out = String::new();
        flatten("", &json, &mut out);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("report serializes")
    }

    pub fn fallback_used(&self) -> bool {
        self.report.r_z_source == RadiusSource::Fallback
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: [{}]\n", parts.join(", ")));
        }
        other => out.push_str(&format!("{prefix}: {}\n", scalar(other))),
    }
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f:.16e}"),
            _ => n.to_string(),
        },
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
