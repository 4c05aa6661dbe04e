//! Synthetic instances: sparse nonnegative archetypes mixed by random
//! row-stochastic weights, plus clipped Gaussian noise.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};
use crate::matrix::DenseMatrix;
use crate::rng::{random_row_stochastic, rng_from_seed};
use crate::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SynthInstance<T> {
    /// `max{X₀ + Z, 0}`.
    pub x: DenseMatrix<T>,
    pub x0: DenseMatrix<T>,
    pub h0: DenseMatrix<T>,
    pub w0: DenseMatrix<T>,
    /// Noise before clipping.
    pub z: DenseMatrix<T>,
}

impl<T: Real> SynthInstance<T> {
    /// Index of the largest weight in each row of `W₀`.
    pub fn labels(&self) -> Vec<usize> {
        self.w0
            .row_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |b, (j, &v)| if v > b.1 { (j, v) } else { b })
                    .0
            })
            .collect()
    }
}

/// Draws `H₀ ~ U[0,1]^{k×n}` with exactly `round(zero_frac·nk)` entries
/// zeroed, `W₀` uniform with unit row sums, `X₀ = W₀H₀`, `Z ~ N(0, σ_z²)`.
pub fn synth_instance<T: Real>(
    m: usize,
    n: usize,
    k: usize,
    sigma_z: f64,
    zero_frac: f64,
    seed: u64,
) -> Result<SynthInstance<T>> {
    if !(0.0..1.0).contains(&zero_frac) {
        return Err(SaaError::invalid("zero_frac must lie in [0, 1)"));
    }
    if !(sigma_z >= 0.0 && sigma_z.is_finite()) {
        return Err(SaaError::invalid("sigma_z must be finite and ≥ 0"));
    }
    if m == 0 || n == 0 || k == 0 {
        return Err(SaaError::invalid("m, n and k must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut h0 = DenseMatrix::from_fn(k, n, |_, _| T::lit(rng.random::<f64>()));
    let zeros = (zero_frac * (n * k) as f64).round() as usize;
    for p in sample(&mut rng, n * k, zeros) {
        h0.as_mut_slice()[p] = T::zero();
    }
    let w0: DenseMatrix<T> = random_row_stochastic(m, k, &mut rng);
    let x0 = w0.matmul(&h0);
    let z = if sigma_z > 0.0 {
        let normal = Normal::new(0.0, sigma_z).map_err(|e| SaaError::invalid(e.to_string()))?;
        DenseMatrix::from_fn(m, n, |_, _| T::lit(normal.sample(&mut rng)))
    } else {
        DenseMatrix::zeros(m, n)
    };
    let x = x0.add(&z).map(|v| v.max(T::zero()));
    Ok(SynthInstance { x, x0, h0, w0, z })
}
