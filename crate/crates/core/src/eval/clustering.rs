//! Nearest-archetype clustering and its agreement with reference labels.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};
use crate::geometry::archetype_distance;
use crate::matrix::DenseMatrix;
use crate::Real;

/// Index of the nearest row of `h` for every row of `x`; ties go to the
/// lower index.
pub fn cluster_assign<T: Real>(x: &DenseMatrix<T>, h: &DenseMatrix<T>) -> Result<Vec<usize>> {
    Ok(archetype_distance(x, h)?.assignment)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    pub purity: f64,
    pub entropy: f64,
    /// `confusion[r][u]`: points placed in cluster `r` whose true label is `u`.
    pub confusion: Vec<Vec<usize>>,
}

/// Purity `(1/m) Σ_r max_u m_r^u` and entropy
/// `−1/(m log₂ k) Σ_r Σ_u m_r^u log₂(m_r^u / m_r)`, with `0·log 0 = 0`.
/// Labels are `0..k`.
pub fn cluster_metrics(true_labels: &[usize], est_labels: &[usize], k: usize) -> Result<ClusterMetrics> {
    if true_labels.len() != est_labels.len() {
        return Err(SaaError::shape(
            "cluster_metrics",
            format!("{} labels", true_labels.len()),
            format!("{} labels", est_labels.len()),
        ));
    }
    if true_labels.is_empty() || k == 0 {
        return Err(SaaError::invalid("cluster_metrics needs labels and k ≥ 1"));
    }
    if let Some(bad) = true_labels.iter().chain(est_labels).find(|&&l| l >= k) {
        return Err(SaaError::invalid(format!("label {bad} outside 0..{k}")));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (&u, &r) in true_labels.iter().zip(est_labels) {
        confusion[r][u] += 1;
    }
    let m = true_labels.len() as f64;
    let purity = confusion
        .iter()
        .map(|row| *row.iter().max().unwrap() as f64)
        .sum::<f64>()
        / m;
    let mut acc = 0.0;
    for row in &confusion {
        let mr: usize = row.iter().sum();
        for &c in row.iter().filter(|&&c| c > 0) {
            acc += c as f64 * (c as f64 / mr as f64).log2();
        }
    }
    let entropy = if k == 1 || acc == 0.0 { 0.0 } else { -acc / (m * (k as f64).log2()) };
    Ok(ClusterMetrics {
        purity,
        entropy: entropy.max(0.0),
        confusion,
    })
}
