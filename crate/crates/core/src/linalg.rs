//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symtensor::SymValueTensor;

/// Matrix of an order-2 symmetric tensor.
pub fn matrix_of(t: &SymValueTensor) -> DMatrix<f64> {
    debug_assert_eq!(t.order(), 2);
    let n = t.n();
    DMatrix::from_fn(n, n, |i, j| t.get(&[i, j]))
}

pub fn sym_from_matrix(m: &DMatrix<f64>) -> SymValueTensor {
    SymValueTensor::from_fn(m.nrows(), 2, |i| 0.5 * (m[(i[0], i[1])] + m[(i[1], i[0])]))
}

/// 2-norm condition number; infinite for exactly singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a matrix after a conditioning check.
pub fn checked_inverse(m: &DMatrix<f64>, max_condition: f64) -> Result<(DMatrix<f64>, f64)> {
    let condition = condition_number(m);
    if !(condition <= max_condition) {
        return Err(Error::SingularMetric { condition });
    }
    let inv = m.clone().try_inverse().ok_or(Error::SingularMetric { condition })?;
    Ok((inv, condition))
}

/// Backward-error style residual `|A x - b| / (|A| |x| + |b|)`, zero for an
/// exactly homogeneous system.
pub fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = (a * x - b).norm();
    let scale = a.norm() * x.norm() + b.norm();
    if scale == 0.0 {
        0.0
    } else {
        r / scale
    }
}

/// True when Cholesky succeeds, i.e. the symmetric matrix is positive definite.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}
