//! Lyapunov analysis of the perturbed error dynamics `ż = Fz + g(z, t)`:
//! the Lyapunov matrix, sampled plant constants, the κ growth-bound
//! coefficients, the margins `σ`, `b`, `r_z`, `r_θ` and the ultimate-bound
//! envelope.

mod constants;
mod lyapunov;
mod report;

pub use constants::{
    estimate_constants, kappa_bounds, sample_parameter_ball, BoundConstants, Kappas, OperatingRegion, MIN_SAMPLES,
};
pub use lyapunov::{lyapunov_residual, solve_lyapunov, spectral_abscissa};
pub use report::{envelope_with_rate, stability_report, ultimate_bound_envelope, RadiusSource, StabilityReport};
