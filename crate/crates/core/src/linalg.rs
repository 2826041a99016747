//! Small dense helpers shared across modules.

use nalgebra::{Const, DimMin, SMatrix};

pub(crate) fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn max_asymmetry<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    (m - m.transpose()).amax()
}

/// Largest and smallest singular value.
pub(crate) fn singular_range<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> (f64, f64)
where
    Const<R>: DimMin<Const<C>>,
    SMatrix<f64, R, C>: SvdCapable,
{
    SvdCapable::singular_range(m)
}

pub(crate) fn spectral_norm<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64
where
    Const<R>: DimMin<Const<C>>,
    SMatrix<f64, R, C>: SvdCapable,
{
    SvdCapable::singular_range(m).0
}

/// Condition number in the 2-norm; `inf` for singular matrices.
pub(crate) fn condition_number<const N: usize>(m: &SMatrix<f64, N, N>) -> f64
where
    Const<N>: DimMin<Const<N>>,
    SMatrix<f64, N, N>: SvdCapable,
{
    let (hi, lo) = SvdCapable::singular_range(m);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Indirection so generic helpers work for the handful of fixed shapes we
/// use without repeating nalgebra's SVD trait bounds everywhere.
pub(crate) trait SvdCapable {
    fn singular_range(&self) -> (f64, f64);
}

macro_rules! svd_capable {
    ($(($r:literal, $c:literal)),*) => {
        $(impl SvdCapable for SMatrix<f64, $r, $c> {
            fn singular_range(&self) -> (f64, f64) {
                let sv = self.singular_values();
                (sv.max(), sv.min())
            }
        })*
    };
}

svd_capable!((3, 3), (4, 4), (6, 6), (12, 12), (6, 12), (12, 6));

/// Cholesky succeeds and the matrix is symmetric to `tol`.
pub(crate) fn is_spd<const N: usize>(m: &SMatrix<f64, N, N>, tol: f64) -> bool {
    max_asymmetry(m) <= tol * m.amax().max(1.0) && m.cholesky().is_some()
}
