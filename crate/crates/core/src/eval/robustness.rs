//! Recovery distances between an estimate `Ĥ` and the true archetypes `H₀`,
//! and the right-hand sides of the robustness guarantees.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};
use crate::geometry::{archetype_distance, archetype_spread, set_distance, HULL_ZERO};
use crate::linalg::condition;
use crate::matrix::{sq_dist, DenseMatrix};
use crate::projection::sparse_complement;
use crate::Real;

/// `c₁ … c₁₀` of the constrained estimator's guarantees, from `κ(H₀)` and
/// `σ_min(H₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct BoundConstants<T> {
    pub kappa: T,
    pub sigma_min: T,
    /// `c[0]` is `c₁`.
    pub c: [T; 10],
}

pub fn bound_constants<T: Real>(m: usize, k: usize, kappa: T, sigma_min: T) -> BoundConstants<T> {
    let mf = T::lit(m as f64);
    let kf = T::lit(k as f64);
    let k32 = kf * kf.sqrt();
    let m32 = mf * mf.sqrt();
    let r2 = T::one() + T::lit(2.0).sqrt();
    let (two, four, six, seven) = (T::lit(2.0), T::lit(4.0), T::lit(6.0), T::lit(7.0));
    let c = [
        four * k32 * kappa * kappa + r2 * k32,
        four * mf * kf * kappa + r2 * kf.sqrt() * (kf + k32),
        two * m32 * kf * kappa + r2 * kf * kf,
        kf + two * k32 * kappa,
        (kf + k32) + two * mf * kf,
        k32 + kf * m32,
        sigma_min / (six * kf.sqrt()),
        seven * kf * kappa + two * r2 * kf * kf * kappa,
        seven * kappa * (kf + k32) + two * r2 * k32 * mf,
        seven * kappa * k32 + r2 * k32 * m32,
    ];
    BoundConstants { kappa, sigma_min, c }
}

/// `c¹_λ, c²_λ, c³_λ` of the penalized estimator's guarantees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn prop1_constants(m: usize, k: usize, kappa: f64, lambda: f64) -> Result<Prop1Constants> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SaaError::invalid("prop1_constants needs a finite lambda > 0"));
    }
    let (mf, kf) = (m as f64, k as f64);
    let r2 = 1.0 + 2f64.sqrt();
    let a = kf * mf.sqrt() * (mf + lambda * kf * kf).sqrt() + mf * kf;
    let s = (mf * kf / lambda + kf.powi(3)).sqrt();
    Ok(Prop1Constants {
        c1: 2.0 * kappa * a + r2 * kf.sqrt() * (s + kf),
        c2: 7.0 * kappa * (s + kf) + r2 * kf.sqrt() * a,
        c3: (1.0 + mf) * kf + kf * mf.sqrt() * (mf + lambda * kf * kf).sqrt() + s,
    })
}

/// Evaluated right-hand sides and whether each inequality holds.
///
/// Distances enter the guarantees as square roots, so every comparison below
/// is between `weak.sqrt()` or `strong.sqrt()` and the stated bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct BoundChecks<T> {
    /// `c₁·sep + c₂·δ + c₃‖P_ℓ^⊥(H₀)‖_F`.
    pub weak_rhs: Option<T>,
    pub weak_holds: Option<bool>,
    /// `c₄·sep + c₅·δ + c₆‖P_ℓ^⊥(H₀)‖_F`, compared with `c₇`.
    pub strong_condition_lhs: Option<T>,
    pub strong_condition_holds: Option<bool>,
    /// `c₈·sep + c₉·δ + c₁₀‖P_ℓ^⊥(H₀)‖_F`.
    pub strong_rhs: Option<T>,
    /// `None` when the condition fails or the constants are undefined.
    pub strong_holds: Option<bool>,
    /// Separable, ℓ-sparse special case (`sep = 0`, `β = 0`).
    pub separable_sparse: bool,
    pub cor_weak_rhs: Option<T>,
    pub cor_strong_condition_holds: Option<bool>,
    pub cor_strong_rhs: Option<T>,
    /// `2k·b(H₀)² + 2·strong`.
    pub spread_rhs: T,
    pub spread_holds: bool,
    /// `D(X₀, Ĥ)^{1/2}`.
    pub denoise_lhs: T,
    /// `√m·min{weak^{1/2}, k‖H₀‖_F + strong^{1/2}}`.
    pub denoise_rhs: T,
    pub denoise_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RobustnessReport<T> {
    pub schema: String,
    /// `𝓛(H₀, Ĥ)`.
    pub weak: T,
    /// `𝓛(Ĥ, H₀)`.
    pub strong: T,
    /// `maxᵢ ‖Zᵢ‖₂`.
    pub delta: T,
    /// `√m‖P_ℓ^⊥(H₀)‖_F`.
    pub beta: T,
    pub alpha: T,
    /// `b(H₀)`, the largest distance between two true archetypes.
    pub spread_b: T,
    /// `D(H₀, X̃₀)^{1/2}` with `X̃₀` the nearest data rows to each archetype.
    pub sep: T,
    pub complement_norm: T,
    /// `None` when `H₀` is rank deficient.
    pub constants: Option<BoundConstants<T>>,
    pub bounds: BoundChecks<T>,
}

/// Slack for comparisons that involve iterative hull distances.
const CHECK_SLACK: f64 = 1e-8;

fn holds<T: Real>(lhs: T, rhs: T) -> bool {
    lhs <= rhs + T::lit(CHECK_SLACK) * (T::one() + rhs.abs())
}

/// Rows of `x0` nearest to each row of `h0`; ties go to the lower row.
fn nearest_rows<T: Real>(h0: &DenseMatrix<T>, x0: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = h0.cols();
    let mut out = DenseMatrix::zeros(h0.rows(), n);
    for i in 0..h0.rows() {
        let mut best = (0, T::infinity());
        for (j, r) in x0.row_iter().enumerate() {
            let d = sq_dist(h0.row(i), r);
            if d < best.1 {
                best = (j, d);
            }
        }
        out.row_mut(i).copy_from_slice(x0.row(best.0));
    }
    out
}

/// Distances and bound checks for an estimate `h_hat` of `h0` from data
/// `x0 + z`.
pub fn robustness_report<T: Real>(
    h0: &DenseMatrix<T>,
    h_hat: &DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    z: &DenseMatrix<T>,
    ell: usize,
) -> Result<RobustnessReport<T>> {
    let n = h0.cols();
    if h_hat.cols() != n || x0.cols() != n || z.shape() != x0.shape() {
        return Err(SaaError::shape(
            "robustness_report",
            format!("H₀, Ĥ, X₀ with {n} columns and Z shaped like X₀ {:?}", x0.shape()),
            format!("Ĥ {:?}, X₀ {:?}, Z {:?}", h_hat.shape(), x0.shape(), z.shape()),
        ));
    }
    if h0.rows() == 0 || h_hat.rows() == 0 || x0.rows() == 0 {
        return Err(SaaError::invalid("robustness_report needs nonempty matrices"));
    }
    let (m, k) = (x0.rows(), h0.rows());
    let mf = T::lit(m as f64);
    let kf = T::lit(k as f64);
    let weak = archetype_distance(h0, h_hat)?.value;
    let strong = archetype_distance(h_hat, h0)?.value;
    let delta = z.row_norms().into_iter().fold(T::zero(), T::max);
    let complement_norm = sparse_complement(h0, ell).frobenius();
    let beta = mf.sqrt() * complement_norm;
    let spread_b = archetype_spread(h0);
    let sep = set_distance(h0, &nearest_rows(h0, x0))?.total.max(T::zero()).sqrt();

    let constants = condition(h0).map(|(kappa, smin)| bound_constants(m, k, kappa, smin));
    let (ws, ss) = (weak.sqrt(), strong.sqrt());
    let lin = |a: T, b: T, c: T| a * sep + b * delta + c * complement_norm;
    let weak_rhs = constants.as_ref().map(|t| lin(t.c[0], t.c[1], t.c[2]));
    let cond_lhs = constants.as_ref().map(|t| lin(t.c[3], t.c[4], t.c[5]));
    let cond_holds = constants.as_ref().zip(cond_lhs).map(|(t, l)| l <= t.c[6]);
    let strong_rhs = constants.as_ref().map(|t| lin(t.c[7], t.c[8], t.c[9]));
    let strong_holds = match (cond_holds, strong_rhs) {
        (Some(true), Some(r)) => Some(holds(ss, r)),
        _ => None,
    };

    let zero = T::lit(HULL_ZERO);
    let separable_sparse = sep * sep <= zero && complement_norm <= zero;
    let r2 = T::one() + T::lit(2.0).sqrt();
    let k32 = kf * kf.sqrt();
    let cor_weak_rhs = constants
        .as_ref()
        .map(|t| (T::lit(4.0) * mf * kf * t.kappa + r2 * kf.sqrt() * (kf + k32)) * delta);
    let cor_cond = constants
        .as_ref()
        .map(|t| ((kf + k32) + T::lit(2.0) * mf * kf) * delta <= t.sigma_min / (T::lit(6.0) * kf.sqrt()));
    let cor_strong_rhs = constants
        .as_ref()
        .map(|t| (T::lit(7.0) * t.kappa * (kf + k32) + T::lit(2.0) * r2 * k32 * mf) * delta);

    let spread_rhs = T::lit(2.0) * kf * spread_b * spread_b + T::lit(2.0) * strong;
    let denoise_lhs = set_distance(x0, h_hat)?.total.max(T::zero()).sqrt();
    let denoise_rhs = mf.sqrt() * ws.min(kf * h0.frobenius() + ss);

    Ok(RobustnessReport {
        schema: crate::io::SCHEMA.to_string(),
        weak,
        strong,
        delta,
        beta,
        alpha: delta + beta,
        spread_b,
        sep,
        complement_norm,
        bounds: BoundChecks {
            weak_rhs,
            weak_holds: weak_rhs.map(|r| holds(ws, r)),
            strong_condition_lhs: cond_lhs,
            strong_condition_holds: cond_holds,
            strong_rhs,
            strong_holds,
            separable_sparse,
            cor_weak_rhs,
            cor_strong_condition_holds: cor_cond,
            cor_strong_rhs,
            spread_rhs,
            spread_holds: holds(weak, spread_rhs),
            denoise_lhs,
            denoise_rhs,
            denoise_holds: holds(denoise_lhs, denoise_rhs),
        },
        constants,
    })
}
