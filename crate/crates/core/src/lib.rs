//! Sparse archetypal analysis (SAA).
//!
//! Factorizes a data matrix `X ≈ W H` where the rows of `W` and `W̃` are
//! stochastic, `H ≥ 0` carries a global cardinality budget `‖H‖₀ ≤ ℓ`, and
//! the archetypes `H` are pulled towards the convex hull of the data through
//! the penalty `λ‖H − W̃X‖²`.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`], [`linalg`], [`config`], [`rng`], [`io`]: shared plumbing.
//! * [`projection`]: simplex, top-ℓ and nonnegative projections.
//! * [`geometry`]: convex-hull distances and archetype distances.
//! * [`solver`]: the block proximal-gradient method and its stationarity test.
//! * [`mip`]: the λ→∞ subproblem solved by outer approximation over a
//!   branch-and-bound MILP, and the λ-continuation driver.
//! * [`local_search`]: support-swap refinement.
//! * [`eval`]: robustness reports, clustering metrics, generators and fixtures.
//! * [`pipeline`]: the composed fit used by the CLI and the experiments.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod local_search;
pub mod matrix;
pub mod mip;
pub mod pipeline;
pub mod projection;
pub mod rng;
pub mod solver;

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use config::{LambdaSpec, SaaConfig};
pub use error::{Result, SaaError};
pub use matrix::DenseMatrix;
pub use solver::Factorization;

/// Floating-point scalar usable by every solver in this crate.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; every `Real` can represent it approximately.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Matrix = DenseMatrix<f64>;
pub type MatrixF32 = DenseMatrix<f32>;
pub type Factorization64 = Factorization<f64>;
pub type FactorizationF32 = Factorization<f32>;
pub type CutSet64 = mip::CutSet<f64>;
pub type RobustnessReport64 = eval::RobustnessReport<f64>;
