use crate::linalg::symmetrize;
use crate::{Error, Result};
use nalgebra::{DMatrix, SMatrix};

const MAX_ITERATIONS: usize = 100;

/// Largest real part over the eigenvalues of a square matrix.
pub fn spectral_abscissa<const N: usize>(f: &SMatrix<f64, N, N>) -> f64 {
    let d = DMatrix::from_column_slice(N, N, f.as_slice());
    d.complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `P F + Fᵀ P = −I` for Hurwitz `F`.
///
/// Newton iteration for the matrix sign function on the Hamiltonian-like
/// pair: `A ← (A + A⁻¹)/2`, `X ← (X + A⁻ᵀ X A⁻¹)/2` from `A = F`, `X = I`.
/// `A` tends to `−I` exactly when `F` is Hurwitz, and then `P = X/2`.
pub fn solve_lyapunov<const N: usize>(f: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    let identity = SMatrix::<f64, N, N>::identity();
    let mut a = *f;
    let mut x = identity;
    let not_hurwitz = || Error::NotHurwitz { spectral_abscissa: spectral_abscissa(f) };
    for _ in 0..MAX_ITERATIONS {
        let a_inv = a.try_inverse().ok_or_else(not_hurwitz)?;
        let next_a = (a + a_inv) * 0.5;
        x = symmetrize(&((x + a_inv.transpose() * x * a_inv) * 0.5));
        let step = (next_a - a).norm();
        a = next_a;
        if !a.iter().all(|v| v.is_finite()) {
            return Err(not_hurwitz());
        }
        if step <= 1e-14 * a.norm().max(1.0) {
            break;
        }
    }
    if (a + identity).amax() > 1e-8 {
        return Err(not_hurwitz());
    }
    let p = x * 0.5;
    if p.cholesky().is_none() {
        return Err(not_hurwitz());
    }
    Ok(p)
}

/// Frobenius norm of `P F + Fᵀ P + I`.
pub fn lyapunov_residual<const N: usize>(p: &SMatrix<f64, N, N>, f: &SMatrix<f64, N, N>) -> f64 {
    (p * f + f.transpose() * p + SMatrix::<f64, N, N>::identity()).norm()
}
