use crate::linalg::max_asymmetry;
use crate::{Error, Mat4, Result, Vec4};
#[allow(unused_imports)]
use nalgebra::{ComplexField, SMatrix, SVector};

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues (unsorted) and the matching eigenvectors as columns.
/// Only the upper triangle is trusted; callers check symmetry.
pub fn symmetric_eigen<const N: usize>(
    m: &SMatrix<f64, N, N>,
) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    let mut a = *m;
    let mut v = SMatrix::<f64, N, N>::identity();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        let scale = a.norm_squared();
        if off == 0.0 || off <= scale * 1e-34 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..N {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diagonal(), v)
}

/// Largest eigenvalue of a symmetric 4×4 matrix, a unit eigenvector, and
/// the gap to the second-largest eigenvalue.
pub(crate) fn top_two(m: &Mat4) -> (f64, Vec4, f64) {
    let (values, vectors) = symmetric_eigen(m);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let top = order[0];
    let v = vectors.column(top).normalize();
    (values[top], v, values[top] - values[order[1]])
}

/// Algebraically largest eigenpair of a symmetric 4×4 matrix.
pub fn max_eigenpair(m: &Mat4) -> Result<(f64, Vec4)> {
    let asym = max_asymmetry(m);
    if asym > 1e-10 * m.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let (lambda, v, _) = top_two(m);
    Ok((lambda, v))
}
