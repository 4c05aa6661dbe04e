//! Small hand-built instances with known distances.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::error::{Result, SaaError};
use crate::matrix::DenseMatrix;
use crate::rng::{random_row_stochastic, rng_from_seed};

/// Three collinear points rotated about `(½, ½)` by `θ`, with an estimate
/// that covers them exactly but sits far from the truth as `θ → π/4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example1 {
    pub theta: f64,
    pub x_theta: DenseMatrix<f64>,
    pub z_theta: DenseMatrix<f64>,
    pub h_theta: DenseMatrix<f64>,
    pub h0: DenseMatrix<f64>,
    pub x0: DenseMatrix<f64>,
}

pub fn example1_fixture(theta: f64) -> Result<Example1> {
    if !(theta > 0.0 && theta < FRAC_PI_4) {
        return Err(SaaError::invalid("theta must lie in (0, π/4)"));
    }
    let r = (1.0 - theta.cos()).sqrt();
    let phi = FRAC_PI_4 - theta / 2.0;
    let shift = theta.sin() / (2f64.sqrt() * (theta + FRAC_PI_4).sin());
    let x0 = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])?;
    let h0 = DenseMatrix::identity(2);
    let z_theta = DenseMatrix::from_rows(&[[r * phi.cos(), r * phi.sin()], [-shift, 0.0], [0.0, 0.0]])?;
    let x_theta = DenseMatrix::from_rows(&[[r * phi.cos(), 1.0 + r * phi.sin()], [1.0 - shift, 0.0], [0.5, 0.5]])?;
    let h_theta = DenseMatrix::from_rows(&[[0.0, (1.0 - shift) * (theta + FRAC_PI_4).tan()], [1.0 - shift, 0.0]])?;
    if x_theta.max_abs_diff(&x0.add(&z_theta)) > 1e-12 {
        return Err(SaaError::Numerical("Example 1: X_θ ≠ X₀ + Z_θ".into()));
    }
    Ok(Example1 {
        theta,
        x_theta,
        z_theta,
        h_theta,
        h0,
        x0,
    })
}

/// Two-dimensional toy: true archetypes `H₀`, a covering but loose `H₁`, and
/// a 2-sparse `H₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixB {
    pub h0: DenseMatrix<f64>,
    pub h1: DenseMatrix<f64>,
    pub h2: DenseMatrix<f64>,
}

impl AppendixB {
    pub const POINTS: usize = 50;

    /// 50 mixtures `W₀H₀` with uniform-then-normalized weights, followed by
    /// the three rows of `H₀`.
    pub fn x0(&self, seed: u64) -> DenseMatrix<f64> {
        let w0: DenseMatrix<f64> = random_row_stochastic(Self::POINTS, 3, &mut rng_from_seed(seed));
        let mixed = w0.matmul(&self.h0);
        let mut rows = mixed.to_f64_rows();
        rows.extend(self.h0.to_f64_rows());
        DenseMatrix::from_rows(&rows).expect("rows share a width")
    }
}

pub fn appendix_b_fixture() -> AppendixB {
    let m = |r: [[f64; 2]; 3]| DenseMatrix::from_rows(&r).expect("fixed shape");
    AppendixB {
        h0: m([[0.15, 0.15], [0.1, 0.7], [0.7, 0.1]]),
        h1: m([[0.05, 0.05], [1.0, 0.1], [0.1, 1.0]]),
        h2: m([[0.0, 0.0], [0.0, 0.8], [0.8, 0.0]]),
    }
}
