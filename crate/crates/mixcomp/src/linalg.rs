//! Dense symmetric linear algebra for small dimensions.
//!
//! Matrices are row-major `dim * dim` slices. The dimensions in this crate
//! are the data dimensions of mixture components (single digits in the
//! bundled experiments), so simple loops beat any external solver.

use crate::math::fp;
use crate::Scalar;

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, or `None` if a pivot is not strictly positive.
///
/// The strict upper triangle of the returned matrix is zero.
pub fn cholesky<S: Scalar>(matrix: &[S], dim: usize) -> Option<Vec<S>> {
    debug_assert_eq!(matrix.len(), dim * dim);
    let mut l = vec![S::zero(); dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = matrix[i * dim + j];
            for k in 0..j {
                sum = sum - l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= S::zero() || !sum.is_finite() {
                    return None;
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// Solve `L y = b` in place for lower-triangular `L`.
pub fn solve_lower_in_place<S: Scalar>(l: &[S], dim: usize, b: &mut [S]) {
    debug_assert_eq!(b.len(), dim);
    for i in 0..dim {
        let mut sum = b[i];
        for k in 0..i {
            sum = sum - l[i * dim + k] * b[k];
        }
        b[i] = sum / l[i * dim + i];
    }
}

/// `log det Σ` from the Cholesky factor of `Σ`.
pub fn log_det_from_cholesky<S: Scalar>(l: &[S], dim: usize) -> S {
    let mut acc = S::zero();
    for i in 0..dim {
        acc += l[i * dim + i].ln();
    }
    acc + acc
}

/// Whether `matrix` is symmetric within an absolute-plus-relative tolerance.
pub fn is_symmetric<S: Scalar>(matrix: &[S], dim: usize, tol: S) -> bool {
    let mut scale = S::zero();
    for &v in matrix {
        let a = v.abs();
        if a > scale {
            scale = a;
        }
    }
    let bound = tol * (S::one() + scale);
    for i in 0..dim {
        for j in 0..i {
            if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > bound {
                return false;
            }
        }
    }
    true
}

/// Replace `matrix` with its symmetric part `(A + Aᵀ) / 2`.
pub fn symmetrize<S: Scalar>(matrix: &mut [S], dim: usize) {
    let half = fp::<S>(0.5);
    for i in 0..dim {
        for j in 0..i {
            let m = (matrix[i * dim + j] + matrix[j * dim + i]) * half;
            matrix[i * dim + j] = m;
            matrix[j * dim + i] = m;
        }
    }
}
