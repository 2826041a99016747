use super::MAX_GAIN_CONDITION;
use crate::linalg::symmetrize;
use crate::{Error, Result};
use nalgebra::{Const, DimMin, SMatrix, SVector};

/// Generic recursive least squares with exponential forgetting for the
/// linear model `y = W a + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState<const N: usize> {
    pub a_hat: SVector<f64, N>,
    pub p_matrix: SMatrix<f64, N, N>,
}

pub(crate) fn one_norm<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse together with a 1-norm condition estimate; refuses singular or
/// badly conditioned matrices.
pub(crate) fn guarded_inverse<const M: usize>(s: &SMatrix<f64, M, M>) -> Result<SMatrix<f64, M, M>>
where
    Const<M>: DimMin<Const<M>, Output = Const<M>>,
{
    let inv = s.try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let condition = one_norm(s) * one_norm(&inv);
    if !condition.is_finite() || condition > MAX_GAIN_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    Ok(inv)
}

impl<const N: usize> RlsState<N> {
    pub fn new(a_hat: SVector<f64, N>, p_matrix: SMatrix<f64, N, N>) -> Result<Self> {
        if !crate::linalg::is_spd(&p_matrix, 1e-12) {
            return Err(Error::InvalidConfig("initial covariance must be symmetric positive definite".into()));
        }
        Ok(Self { a_hat, p_matrix })
    }

    /// `K = PWᵀ(ϱI + WPWᵀ)⁻¹`, `â ← â + K(y − Wâ)`, `P ← (I − KW)P/ϱ`.
    ///
    /// On an ill-conditioned gain the sample is skipped and the state is
    /// left untouched.
    pub fn update<const M: usize>(
        &mut self,
        w: &SMatrix<f64, M, N>,
        y: &SVector<f64, M>,
        varrho: f64,
    ) -> Result<()>
    where
        Const<M>: DimMin<Const<M>, Output = Const<M>>,
    {
        let p = &self.p_matrix;
        let s = SMatrix::<f64, M, M>::identity() * varrho + w * p * w.transpose();
        let k = p * w.transpose() * guarded_inverse(&s)?;
        self.a_hat += k * (y - w * self.a_hat);
        let p_next = (SMatrix::<f64, N, N>::identity() - k * w) * p / varrho;
        self.p_matrix = symmetrize(&p_next);
        Ok(())
    }
}
