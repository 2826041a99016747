use super::forgetting_factor;
use super::rls::guarded_inverse;
use crate::linalg::{is_spd, symmetrize};
use crate::rigidmotion::{skew, UnitQuaternion};
use crate::{Error, Mat3, Result, Vec3};

/// Default initial covariance scale `P₀ = 100·I`.
pub const DEFAULT_P0_SCALE: f64 = 100.0;

/// Recursive least-squares estimator of the grasp displacement `ρ` given
/// the current attitude estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementEstimator {
    rho_hat: Vec3,
    p_matrix: Mat3,
    varrho: f64,
}

impl DisplacementEstimator {
    pub fn new(rho0: Vec3, p0: Mat3, mu: f64, h: f64) -> Result<Self> {
        let varrho = forgetting_factor(mu, h)?;
        if !is_spd(&p0, 1e-12) {
            return Err(Error::InvalidConfig(
                "displacement covariance P0 must be symmetric positive definite".into(),
            ));
        }
        Ok(Self { rho_hat: rho0, p_matrix: p0, varrho })
    }

    /// `ρ̂₀ = 0`, `P₀ = 100·I`.
    pub fn with_defaults(mu: f64, h: f64) -> Result<Self> {
        Self::new(Vec3::zeros(), Mat3::identity() * DEFAULT_P0_SCALE, mu, h)
    }

    /// One sample of `v₂ = A(η)v₁ + ω₂ × ρ`:
    ///
    /// `K = −P[ω₂×](ϱI − [ω₂×]P[ω₂×])⁻¹`,
    /// `ρ̂ ← ρ̂ + K(v₂ − A(η̂)v₁ − ω₂ × ρ̂)`, `P ← (I − K[ω₂×])P/ϱ`.
    ///
    /// This is the generic forgetting RLS with regressor `W = [ω₂×]` and
    /// measurement `y = v₂ − A(η̂)v₁`. An ill-conditioned gain skips the
    /// sample and leaves the state unchanged.
    pub fn update(&mut self, eta_hat: &UnitQuaternion, v1: &Vec3, v2: &Vec3, w2: &Vec3) -> Result<()> {
        let wx = skew(w2);
        let p = &self.p_matrix;
        let s = Mat3::identity() * self.varrho - wx * p * wx;
        let k = -(p * wx) * guarded_inverse(&s)?;
        let innovation = v2 - eta_hat.rotation_matrix() * v1 - w2.cross(&self.rho_hat);
        self.rho_hat += k * innovation;
        self.p_matrix = symmetrize(&((Mat3::identity() - k * wx) * p / self.varrho));
        Ok(())
    }

    pub fn rho_hat(&self) -> Vec3 {
        self.rho_hat
    }

    pub fn p_matrix(&self) -> &Mat3 {
        &self.p_matrix
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }
}
