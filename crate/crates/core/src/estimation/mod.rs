//! Cascaded online estimation of the relative grasp pose.
//!
//! The attitude `η` is the dominant eigenvector of an exponentially
//! weighted data matrix `Γ` built from angular-velocity pairs. Given `η̂`,
//! the displacement `ρ` enters the linear-velocity relation linearly and is
//! tracked by a recursive least-squares filter with forgetting. A sliding
//! window of `ω₂` samples monitors persistent excitation.

mod attitude;
mod displacement;
mod eigen;
mod pe;
mod rls;

pub use attitude::AttitudeEstimator;
pub use displacement::{DisplacementEstimator, DEFAULT_P0_SCALE};
pub use eigen::{max_eigenpair, symmetric_eigen};
pub use pe::{pe_matrix, PeWindow};
pub use rls::RlsState;

use crate::{Error, Result};
#[allow(unused_imports)]
use nalgebra::ComplexField;

/// Condition number above which a gain inversion is refused.
pub const MAX_GAIN_CONDITION: f64 = 1e12;

/// Relative spectral gap `(λ₁ − λ₂)/λ₁` below which the attitude estimate
/// is flagged as not yet identifiable.
pub const DEGENERATE_GAP: f64 = 1e-9;

/// Discrete forgetting factor `ϱ = exp(−μh)`.
pub fn forgetting_factor(mu: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidConfig("sample interval h must be positive".into()));
    }
    if !(mu >= 0.0) || !(mu < 1.0) {
        return Err(Error::InvalidConfig("fading-memory factor mu must lie in [0, 1)".into()));
    }
    Ok((-mu * h).exp())
}
