use super::eigen::top_two;
use super::{forgetting_factor, DEGENERATE_GAP};
use crate::linalg::symmetrize;
use crate::rigidmotion::{omega_matrix, UnitQuaternion};
use crate::{Mat4, Result, Vec3};

/// Recursive attitude estimator: `Γₖ = ϱΓₖ₋₁ + Ω(ω₁ₖ, ω₂ₖ)`, `η̂ₖ` the
/// dominant eigenvector of `Γₖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeEstimator {
    gamma: Mat4,
    eta_hat: UnitQuaternion,
    lambda_max: f64,
    varrho: f64,
    step_index: u64,
    spectral_gap: f64,
}

impl AttitudeEstimator {
    /// Starts from `Γ₀ = η₀η₀ᵀ`, which has `η₀` as eigenvector with `λ_max = 1`.
    pub fn new(eta0: UnitQuaternion, mu: f64, h: f64) -> Result<Self> {
        let varrho = forgetting_factor(mu, h)?;
        let q = eta0.to_vector4();
        Ok(Self {
            gamma: q * q.transpose(),
            eta_hat: eta0,
            lambda_max: 1.0,
            varrho,
            step_index: 0,
            spectral_gap: 1.0,
        })
    }

    /// Starts from an arbitrary symmetric `Γ₀`; `Γ₀ = 0` makes `Γₖ` the
    /// plain weighted sum of the data. `eta0` is reported until `Γ` has a
    /// simple top eigenvalue.
    pub fn with_gamma(gamma0: Mat4, eta0: UnitQuaternion, mu: f64, h: f64) -> Result<Self> {
        let varrho = forgetting_factor(mu, h)?;
        let asym = crate::linalg::max_asymmetry(&gamma0);
        if asym > 1e-12 * gamma0.amax().max(1.0) {
            return Err(crate::Error::NotSymmetric { asymmetry: asym });
        }
        let (lambda, v, gap) = top_two(&gamma0);
        let eta_hat = match UnitQuaternion::from_vector4(&v) {
            Ok(q) if gap > 0.0 => q.canonical(),
            _ => eta0,
        };
        Ok(Self { gamma: symmetrize(&gamma0), eta_hat, lambda_max: lambda, varrho, step_index: 0, spectral_gap: gap })
    }

    /// Folds in one angular-velocity pair and re-solves the eigenproblem.
    pub fn update(&mut self, w1: &Vec3, w2: &Vec3) {
        self.gamma = symmetrize(&(self.gamma * self.varrho + omega_matrix(w1, w2)));
        let (lambda, v, gap) = top_two(&self.gamma);
        // The Jacobi vector is unit to rounding; renormalisation cannot fail.
        if let Ok(q) = UnitQuaternion::from_vector4(&v) {
            self.eta_hat = q.canonical();
        }
        self.lambda_max = lambda;
        self.spectral_gap = gap;
        self.step_index += 1;
    }

    pub fn gamma(&self) -> &Mat4 {
        &self.gamma
    }

    pub fn eta_hat(&self) -> UnitQuaternion {
        self.eta_hat
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn spectral_gap(&self) -> f64 {
        self.spectral_gap
    }

    /// The two largest eigenvalues of `Γ` coincide to relative precision
    /// `DEGENERATE_GAP`: the data seen so far do not pin down the attitude.
    pub fn is_degenerate(&self) -> bool {
        self.spectral_gap <= DEGENERATE_GAP * self.lambda_max.abs()
    }

    /// `‖Γη̂ − λ_max η̂‖`.
    pub fn eigen_residual(&self) -> f64 {
        let q = self.eta_hat.to_vector4();
        (self.gamma * q - q * self.lambda_max).norm()
    }
}
