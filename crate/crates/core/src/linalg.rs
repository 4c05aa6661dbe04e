//! Small dense linear-algebra routines: spectral norm and singular values.

use crate::error::{Result, SaaError};
use crate::matrix::{dot, DenseMatrix};
use crate::Real;

pub const POWER_ITER_MAX: usize = 10_000;

/// Largest singular value of `a` by power iteration on the smaller Gram matrix.
///
/// The start vector is the normalized all-ones vector; iteration stops when the
/// eigenvalue estimate changes by less than `tol` relative.
pub fn spectral_norm<T: Real>(a: &DenseMatrix<T>, tol: T) -> Result<T> {
    if a.is_empty() {
        return Err(SaaError::invalid("spectral_norm of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(SaaError::invalid("spectral_norm: non-finite entries"));
    }
    if !(tol > T::zero()) {
        return Err(SaaError::invalid("spectral_norm: tol must be positive"));
    }
    let gram = if a.rows() <= a.cols() {
        a.matmul_t(a)
    } else {
        a.t_matmul(a)
    };
    Ok(largest_eigenvalue_psd(&gram, tol).sqrt())
}

/// `spectral_norm` squared, with the crate's default tolerance.
pub(crate) fn sigma_max_sq<T: Real>(a: &DenseMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    let gram = if a.rows() <= a.cols() {
        a.matmul_t(a)
    } else {
        a.t_matmul(a)
    };
    largest_eigenvalue_psd(&gram, default_tol::<T>())
}

pub(crate) fn default_tol<T: Real>() -> T {
    (T::epsilon() * T::lit(1e4)).max(T::lit(1e-12))
}

fn largest_eigenvalue_psd<T: Real>(g: &DenseMatrix<T>, tol: T) -> T {
    let d = g.rows();
    let mut v = vec![T::one() / T::lit(d as f64).sqrt(); d];
    let mut w = vec![T::zero(); d];
    let mut estimate = T::zero();
    let mut restarted = false;
    for _ in 0..POWER_ITER_MAX {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = dot(g.row(i), &v);
        }
        let norm = dot(&w, &w).sqrt();
        if norm == T::zero() {
            // start vector in the null space; retry from the heaviest axis
            if restarted {
                return T::zero();
            }
            restarted = true;
            let j = (0..d)
                .max_by(|&a, &b| g[(a, a)].partial_cmp(&g[(b, b)]).unwrap())
                .unwrap();
            if g[(j, j)] <= T::zero() {
                return T::zero();
            }
            v.iter_mut().for_each(|x| *x = T::zero());
            v[j] = T::one();
            continue;
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let converged = (norm - estimate).abs() <= tol * norm;
        estimate = norm;
        if converged {
            break;
        }
    }
    estimate
}

/// Singular values in descending order, `min(rows, cols)` of them.
///
/// One-sided Jacobi rotations orthogonalize the rows of the wider orientation;
/// the singular values are the resulting row norms.
pub fn singular_values<T: Real>(a: &DenseMatrix<T>) -> Vec<T> {
    let mut work = if a.rows() <= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let r = work.rows();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..r {
            for q in (p + 1)..r {
                let alpha = dot(work.row(p), work.row(p));
                let beta = dot(work.row(q), work.row(q));
                let gamma = dot(work.row(p), work.row(q));
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let cols = work.cols();
                for j in 0..cols {
                    let x = work[(p, j)];
                    let y = work[(q, j)];
                    work[(p, j)] = c * x - s * y;
                    work[(q, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = work.row_norms();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Condition number `σ_max/σ_min` and `σ_min`, or `None` when rank deficient.
pub fn condition<T: Real>(a: &DenseMatrix<T>) -> Option<(T, T)> {
    let sv = singular_values(a);
    let max = *sv.first()?;
    let min = *sv.last()?;
    if min <= max * T::epsilon() * T::lit(sv.len().max(1) as f64) || min <= T::zero() {
        None
    } else {
        Some((max / min, min))
    }
}
