use super::constants::Kappas;
use super::lyapunov::{lyapunov_residual, solve_lyapunov};
use crate::control::{closed_loop_matrix, Gains};
use crate::{Error, Mat12, Result};
use alloc::vec::Vec;
#[allow(unused_imports)]
use nalgebra::ComplexField;

/// Where the domain radius `r_z` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusSource {
    /// `r_z = κ₀/κ₂`.
    KappaRatio,
    /// `κ₂ = 0`; the caller-supplied radius is used.
    Fallback,
}

/// Lyapunov matrix and the derived stability margins.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub p_matrix: Mat12,
    pub residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub gamma: f64,
    pub kappas: Kappas,
    /// `α‖θ̃(0)‖`, the assumed bound on the parameter error.
    pub r_theta: f64,
    pub sigma: f64,
    /// `1/(2λ̄)`, the decay rate with exact parameters.
    pub sigma0: f64,
    pub b: f64,
    pub r_z: f64,
    pub r_z_source: RadiusSource,
    /// `1/(2λ̄(κ₁ + γ(κ₀ + κ₂)))`.
    pub r_theta_bound: f64,
    /// `r_θ` is within `r_theta_bound`.
    pub admissible: bool,
    /// `σ > 0`, i.e. `r_θ < 1/(2κ₁λ̄)`.
    pub sigma_positive: bool,
}

impl StabilityReport {
    /// Largest initial tracking error keeping the state in `‖z‖ ≤ r_z`:
    /// `r_z/√γ`.
    pub fn max_initial_error(&self) -> f64 {
        self.r_z / self.gamma.sqrt()
    }

    /// `V(z) = √(zᵀPz)`.
    pub fn lyapunov_value(&self, z: &crate::Vec12) -> f64 {
        (z.transpose() * self.p_matrix * z)[0].max(0.0).sqrt()
    }
}

/// Builds the report for `gains` and `κ`'s with the parameter-error bound
/// `r_θ = α·theta_error_initial`.
///
/// When `κ₂ = 0` the ratio `κ₀/κ₂` is undefined; `r_z_fallback` is then
/// used, and without one the call fails with `InfeasibleBounds`.
pub fn stability_report(
    gains: &Gains,
    kappas: &Kappas,
    theta_error_initial: f64,
    alpha: f64,
    r_z_fallback: Option<f64>,
) -> Result<StabilityReport> {
    if !(alpha > 0.0) || !(theta_error_initial >= 0.0) {
        return Err(Error::InvalidConfig("alpha must be positive and the initial error non-negative".into()));
    }
    let f = closed_loop_matrix(gains);
    let p = solve_lyapunov(&f)?;
    let eig = p.symmetric_eigenvalues();
    let (lambda_min, lambda_max) = (eig.min(), eig.max());
    let gamma = lambda_max / lambda_min;
    let Kappas { kappa0, kappa1, kappa2 } = *kappas;

    let (r_z, r_z_source) = if kappa2 > 0.0 {
        (kappa0 / kappa2, RadiusSource::KappaRatio)
    } else {
        match r_z_fallback {
            Some(r) if r > 0.0 => (r, RadiusSource::Fallback),
            _ => return Err(Error::InfeasibleBounds),
        }
    };
    let r_theta = alpha * theta_error_initial;
    let sigma0 = 1.0 / (2.0 * lambda_max);
    let sigma = sigma0 - kappa1 * r_theta;
    let b = lambda_max * (kappa2 * r_z * r_z + kappa0);
    let r_theta_bound = 1.0 / (2.0 * lambda_max * (kappa1 + gamma * (kappa0 + kappa2)));
    Ok(StabilityReport {
        residual: lyapunov_residual(&p, &f),
        p_matrix: p,
        lambda_min,
        lambda_max,
        gamma,
        kappas: *kappas,
        r_theta,
        sigma,
        sigma0,
        b,
        r_z,
        r_z_source,
        r_theta_bound,
        admissible: r_theta <= r_theta_bound,
        sigma_positive: sigma > 0.0,
    })
}

/// `√γ‖z(0)‖e^{−σt} + (b/λ̲)∫₀ᵗ e^{−σ(t−τ)}‖θ̃(τ)‖dτ` at each logged time,
/// with the convolution by the trapezoidal rule on the sample grid.
///
/// `times` must be non-decreasing and start at 0; `theta_error` holds
/// `‖θ̃‖` at the same instants.
pub fn ultimate_bound_envelope(
    z0_norm: f64,
    report: &StabilityReport,
    times: &[f64],
    theta_error: &[f64],
) -> Result<Vec<f64>> {
    envelope_with_rate(z0_norm, report.sigma, report, times, theta_error)
}

/// As [`ultimate_bound_envelope`] with an explicit decay rate.
pub fn envelope_with_rate(
    z0_norm: f64,
    sigma: f64,
    report: &StabilityReport,
    times: &[f64],
    theta_error: &[f64],
) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma { sigma });
    }
    if times.len() != theta_error.len() {
        return Err(Error::InvalidConfig("time and parameter-error traces differ in length".into()));
    }
    let scale = report.gamma.sqrt() * z0_norm;
    let gain = report.b / report.lambda_min;
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            let decay = (-sigma * dt).exp();
            integral = decay * integral + 0.5 * dt * (decay * theta_error[k - 1] + theta_error[k]);
        }
        out.push(scale * (-sigma * times[k]).exp() + gain * integral);
    }
    Ok(out)
}
