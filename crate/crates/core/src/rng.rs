//! Deterministic random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::DenseMatrix;
use crate::Real;

pub type SaaRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SaaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed for stream `stream` of a master seed (splitmix64).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix with iid `Unif[0,1)` entries, each row normalized to sum to one.
pub fn random_row_stochastic<T: Real, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix<T> {
    let mut m = DenseMatrix::from_fn(rows, cols, |_, _| T::lit(rng.random::<f64>()));
    for i in 0..rows {
        let row = m.row_mut(i);
        let s: T = row.iter().copied().sum();
        if s > T::zero() {
            row.iter_mut().for_each(|v| *v = *v / s);
        } else {
            let u = T::one() / T::lit(cols as f64);
            row.iter_mut().for_each(|v| *v = u);
        }
    }
    m
}
