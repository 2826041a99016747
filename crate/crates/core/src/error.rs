use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its documented domain.
    InvalidConfig(String),
    /// The XYZ Euler middle angle is too close to ±π/2.
    RepresentationSingularity { middle_angle: f64 },
    /// The matrix handed to a symmetric eigen-solver is not symmetric.
    NotSymmetric { asymmetry: f64 },
    /// A gain or covariance inversion exceeded the allowed condition number.
    IllConditioned { condition: f64 },
    /// The manipulator Jacobian is numerically singular.
    NearSingularJacobian { condition: f64 },
    /// A representation matrix `L` could not be inverted.
    SingularL,
    /// The spectral abscissa of a matrix that must be Hurwitz is not negative.
    NotHurwitz { spectral_abscissa: f64 },
    /// Envelope requested with a non-positive decay rate.
    NonPositiveSigma { sigma: f64 },
    /// `κ₂ = 0` leaves the domain radius `r_z = κ₀/κ₂` undefined and no
    /// fallback radius was supplied.
    InfeasibleBounds,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::RepresentationSingularity { middle_angle } => write!(
                f,
                "orientation representation singular: middle Euler angle {middle_angle:.6} rad is within 1e-3 of ±π/2"
            ),
            Error::NotSymmetric { asymmetry } => {
                write!(f, "matrix is not symmetric (max |m - mᵀ| = {asymmetry:e})")
            }
            Error::IllConditioned { condition } => {
                write!(f, "ill-conditioned inversion (condition number {condition:e})")
            }
            Error::NearSingularJacobian { condition } => {
                write!(f, "near-singular Jacobian (condition number {condition:e})")
            }
            Error::SingularL => write!(f, "representation matrix L is singular"),
            Error::NotHurwitz { spectral_abscissa } => write!(
                f,
                "matrix is not Hurwitz (largest eigenvalue real part {spectral_abscissa:e})"
            ),
            Error::NonPositiveSigma { sigma } => {
                write!(f, "decay rate sigma = {sigma:e} is not positive")
            }
            Error::InfeasibleBounds => {
                write!(f, "kappa2 = 0: domain radius r_z = kappa0/kappa2 is undefined and no fallback was given")
            }
        }
    }
}

impl core::error::Error for Error {}
