//! Projections composed by the solvers: unit simplex (row-wise), global
//! top-ℓ hard thresholding `P_ℓ`, and nonnegative clamping.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};
use crate::matrix::DenseMatrix;
use crate::Real;

/// Coordinates retained by `P_ℓ`, in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityPattern {
    pub kept: Vec<(usize, usize)>,
    pub budget: usize,
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx = 1}` (sort-and-threshold).
pub fn project_simplex_vec<T: Real>(v: &mut [T]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (i, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let t = (cumsum - T::one()) / T::lit((i + 1) as f64);
        if u - t > T::zero() {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(T::zero());
    }
}

/// Projects every row of `a` onto the unit simplex.
pub fn project_simplex_rows<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols() == 0 {
        return Err(SaaError::invalid("simplex projection of an empty row"));
    }
    if !a.is_finite() {
        return Err(SaaError::invalid("simplex projection: non-finite entries"));
    }
    let mut out = a.clone();
    project_simplex_rows_in_place(&mut out);
    Ok(out)
}

pub(crate) fn project_simplex_rows_in_place<T: Real>(a: &mut DenseMatrix<T>) {
    for i in 0..a.rows() {
        project_simplex_vec(a.row_mut(i));
    }
}

/// Flat indices of the `ell` largest-magnitude entries; ties go to the
/// earlier row-major index. Returned sorted ascending.
pub(crate) fn top_indices<T: Real>(values: &[T], ell: usize) -> Vec<usize> {
    let n = values.len();
    if ell >= n {
        return (0..n).collect();
    }
    if ell == 0 {
        return Vec::new();
    }
    let order = |&a: &usize, &b: &usize| -> Ordering {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.select_nth_unstable_by(ell - 1, order);
    idx.truncate(ell);
    idx.sort_unstable();
    idx
}

/// `P_ℓ`: keeps the `ell` largest-magnitude entries over the whole matrix.
pub fn project_sparse<T: Real>(a: &DenseMatrix<T>, ell: usize) -> (DenseMatrix<T>, SparsityPattern) {
    let cols = a.cols();
    let keep = top_indices(a.as_slice(), ell);
    let mut out = DenseMatrix::zeros(a.rows(), cols);
    let data = out.as_mut_slice();
    for &p in &keep {
        data[p] = a.as_slice()[p];
    }
    let kept = keep.iter().map(|&p| (p / cols, p % cols)).collect();
    (out, SparsityPattern { kept, budget: ell })
}

/// `P_ℓ^⊥(A) = A − P_ℓ(A)`.
pub fn sparse_complement<T: Real>(a: &DenseMatrix<T>, ell: usize) -> DenseMatrix<T> {
    a.sub(&project_sparse(a, ell).0)
}

pub fn clamp_nonneg<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    a.map(|v| v.max(T::zero()))
}

/// Projection onto `{H ≥ 0, ‖H‖₀ ≤ ell}`.
pub(crate) fn project_nonneg_sparse<T: Real>(a: &DenseMatrix<T>, ell: usize) -> DenseMatrix<T> {
    project_sparse(&clamp_nonneg(a), ell).0
}
