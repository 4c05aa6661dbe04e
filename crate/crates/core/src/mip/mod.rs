//! The λ → ∞ limit of the penalized problem, solved as a binary program over
//! the support pattern `Z` of `H`:
//!
//! ```text
//! min_Z F(Z)   s.t. Z ∈ {0,1}^{k×n}, Σ Z ≤ ℓ
//! F(Z) = min ‖H − W̃X‖²_F  s.t. 0 ≤ H ≤ √b·Z, W̃ row-stochastic.
//! ```
//!
//! `F` is convex in `Z` with subgradient `G = −√b·Λ`, so outer approximation
//! builds a piecewise-linear underestimator from cuts and minimizes it with a
//! small MILP (see [`milp`]). [`outer`] holds the loop and the λ-continuation.

pub mod milp;
pub mod outer;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};
use crate::linalg::sigma_max_sq;
use crate::matrix::DenseMatrix;
use crate::projection::project_simplex_rows_in_place;
use crate::Real;

pub use milp::{milp_min_cuts, BranchAndBound, MilpBackend, MilpSolution};
pub use outer::{continuation, outer_approximation, ContinuationOutput, MipConfig, OuterResult};

pub const DEFAULT_F_TOL: f64 = 1e-10;
pub const DEFAULT_F_MAX_ITER: usize = 20_000;

/// `b = k(maxᵤ‖Xᵤ‖₂ + √k·minᵤ‖Xᵤ‖₂)²`, an upper bound on `‖H*‖²_F` that also
/// bounds every entry of an optimal `H` by `√b`.
pub fn norm_bound_b<T: Real>(x: &DenseMatrix<T>, k: usize) -> Result<T> {
    if x.is_empty() {
        return Err(SaaError::invalid("norm_bound_b of an empty matrix"));
    }
    let norms = x.row_norms();
    let max = norms.iter().copied().fold(T::zero(), T::max);
    let min = norms.iter().copied().fold(T::infinity(), T::min);
    let kf = T::lit(k as f64);
    Ok(kf * (max + kf.sqrt() * min).powi(2))
}

/// Minimizers of the inner problem defining `F(Z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FEval<T> {
    pub value: T,
    pub h: DenseMatrix<T>,
    pub wt: DenseMatrix<T>,
    pub iterations: usize,
}

/// Inner solver settings for `F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FOptions {
    /// Stop once the Frank–Wolfe gap is at most `tol·(1 + f)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_F_TOL,
            max_iter: DEFAULT_F_MAX_ITER,
        }
    }
}

fn check_pattern<T: Real>(z: &DenseMatrix<T>, n: usize, ell: usize) -> Result<()> {
    if z.cols() != n {
        return Err(SaaError::shape(
            "eval_f",
            format!("pattern with {n} columns"),
            format!("{:?}", z.shape()),
        ));
    }
    if z.as_slice().iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
        return Err(SaaError::invalid("pattern entries must lie in [0, 1]"));
    }
    let total: T = z.as_slice().iter().copied().sum();
    if total > T::lit(ell as f64) + T::lit(1e-9) {
        return Err(SaaError::invalid(format!(
            "pattern has Σ Z = {total}, above ell = {ell}"
        )));
    }
    Ok(())
}

/// `F(Z)` with its minimizers `(H*, W̃*)`.
///
/// `Z` may be fractional in `[0, 1]`, which gives the convex relaxation used
/// to test cut validity.
pub fn eval_f<T: Real>(
    z: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    ell: usize,
    b: T,
    opts: FOptions,
) -> Result<FEval<T>> {
    let (m, _) = x.shape();
    let wt0 = DenseMatrix::filled(z.rows(), m, T::one() / T::lit(m as f64));
    eval_f_from(z, x, ell, b, opts, &wt0)
}

/// [`eval_f`] with the inner solver started at `wt0`.
pub fn eval_f_from<T: Real>(
    z: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    ell: usize,
    b: T,
    opts: FOptions,
    wt0: &DenseMatrix<T>,
) -> Result<FEval<T>> {
    let (m, n) = x.shape();
    check_pattern(z, n, ell)?;
    if wt0.shape() != (z.rows(), m) {
        return Err(SaaError::shape(
            "eval_f",
            format!("start {}x{m}", z.rows()),
            format!("{:?}", wt0.shape()),
        ));
    }
    let upper = z.scale(b.sqrt());
    let lipschitz = T::lit(2.0) * (T::one() + sigma_max_sq(x));
    let mut wt = wt0.clone();
    project_simplex_rows_in_place(&mut wt);
    let mut iterations = 0;
    for i in 0..z.rows() {
        let (w, it) = solve_row(x, upper.row(i), wt.row(i), lipschitz, opts);
        wt.row_mut(i).copy_from_slice(&w);
        iterations = iterations.max(it);
    }
    let h = clip_box(&wt.matmul(x), &upper);
    let value = h.sub(&wt.matmul(x)).frobenius_sq();
    Ok(FEval {
        value,
        h,
        wt,
        iterations,
    })
}

fn clip_box<T: Real>(v: &DenseMatrix<T>, upper: &DenseMatrix<T>) -> DenseMatrix<T> {
    v.zip_map(upper, |a, u| a.max(T::zero()).min(u))
}

/// `f(w) = Σⱼ dist(vⱼ, [0, uⱼ])²` with `v = wX`, the row problem after `h`
/// has been eliminated. Returns `(f, ∇f)`.
fn row_objective<T: Real>(x: &DenseMatrix<T>, upper: &[T], w: &[T]) -> (T, Vec<T>) {
    let (m, n) = x.shape();
    let mut v = vec![T::zero(); n];
    for (r, &wr) in w.iter().enumerate() {
        if wr != T::zero() {
            for (vj, &xj) in v.iter_mut().zip(x.row(r)) {
                *vj = *vj + wr * xj;
            }
        }
    }
    let mut f = T::zero();
    for (vj, &uj) in v.iter_mut().zip(upper) {
        let e = *vj - vj.max(T::zero()).min(uj);
        f = f + e * e;
        *vj = e;
    }
    let two = T::lit(2.0);
    let grad = (0..m)
        .map(|r| two * crate::matrix::dot(x.row(r), &v))
        .collect();
    (f, grad)
}

fn fw_gap<T: Real>(w: &[T], g: &[T]) -> T {
    let lin = crate::matrix::dot(w, g);
    let min = g.iter().copied().fold(T::infinity(), T::min);
    lin - min
}

/// Accelerated projected gradient over the simplex with function-value restart.
fn solve_row<T: Real>(x: &DenseMatrix<T>, upper: &[T], start: &[T], lipschitz: T, opts: FOptions) -> (Vec<T>, usize) {
    let tol = T::lit(opts.tol);
    let mut w = start.to_vec();
    let mut y = w.clone();
    let mut t = T::one();
    let (mut fw, gw) = row_objective(x, upper, &w);
    if fw == T::zero() || fw_gap(&w, &gw) <= tol * (T::one() + fw) {
        return (w, 0);
    }
    let step = T::one() / lipschitz;
    for it in 1..=opts.max_iter {
        let (_, gy) = row_objective(x, upper, &y);
        let mut next: Vec<T> = y.iter().zip(&gy).map(|(&a, &g)| a - step * g).collect();
        crate::projection::project_simplex_vec(&mut next);
        let (fnext, gnext) = row_objective(x, upper, &next);
        if fnext > fw {
            // restart momentum from the current iterate
            t = T::one();
            y = w.clone();
            continue;
        }
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
        let beta = (t - T::one()) / t_next;
        y = next
            .iter()
            .zip(&w)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        t = t_next;
        w = next;
        fw = fnext;
        if fw == T::zero() || fw_gap(&w, &gnext) <= tol * (T::one() + fw) {
            return (w, it);
        }
    }
    (w, opts.max_iter)
}

/// `G = −√b·Λ` with `Λ = 2·max{W̃*X − H*, 0}`.
pub fn subgradient_f<T: Real>(
    h: &DenseMatrix<T>,
    wt: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    b: T,
) -> Result<DenseMatrix<T>> {
    if wt.cols() != x.rows() || h.shape() != (wt.rows(), x.cols()) {
        return Err(SaaError::shape(
            "subgradient_f",
            format!("H {}x{}", wt.rows(), x.cols()),
            format!("H {:?}, W̃ {:?}", h.shape(), wt.shape()),
        ));
    }
    let scale = T::lit(-2.0) * b.sqrt();
    Ok(wt
        .matmul(x)
        .zip_map(h, |v, hv| scale * (v - hv).max(T::zero())))
}

/// Linear lower bound `F(Zᵢ) + ⟨Gᵢ, Z − Zᵢ⟩` from one evaluated pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Cut<T> {
    /// Row-major `k × n` pattern.
    pub z: Vec<bool>,
    pub value: T,
    pub grad: DenseMatrix<T>,
}

impl<T: Real> Cut<T> {
    /// `F(Zᵢ) − ⟨Gᵢ, Zᵢ⟩`.
    pub fn intercept(&self) -> T {
        let on: T = self
            .z
            .iter()
            .zip(self.grad.as_slice())
            .filter(|(z, _)| **z)
            .map(|(_, g)| *g)
            .sum();
        self.value - on
    }

    /// The cut's linear function at a binary pattern.
    pub fn eval(&self, z: &[bool]) -> T {
        let on: T = z
            .iter()
            .zip(self.grad.as_slice())
            .filter(|(z, _)| **z)
            .map(|(_, g)| *g)
            .sum();
        self.intercept() + on
    }
}

/// Bounds after one outer-approximation round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// `F` at the pattern evaluated this round, if any.
    pub value: Option<f64>,
    pub ones: usize,
    pub best_upper: f64,
    pub best_lower: f64,
    pub gap: f64,
    pub milp_nodes: usize,
}

/// Cuts collected by outer approximation together with the bound history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CutSet<T> {
    pub schema: String,
    pub k: usize,
    pub n: usize,
    pub ell: usize,
    pub cuts: Vec<Cut<T>>,
    pub best_upper: T,
    pub best_lower: T,
    pub gap: T,
    /// Index into `cuts` of the incumbent pattern.
    pub incumbent: usize,
    pub rounds: Vec<RoundLog>,
}

impl<T: Real> CutSet<T> {
    pub fn new(k: usize, n: usize, ell: usize) -> Self {
        Self {
            schema: crate::io::SCHEMA.to_string(),
            k,
            n,
            ell,
            cuts: Vec::new(),
            best_upper: T::infinity(),
            best_lower: T::zero(),
            gap: T::infinity(),
            incumbent: 0,
            rounds: Vec::new(),
        }
    }

    /// Piecewise-linear underestimator `maxᵢ F(Zᵢ) + ⟨Gᵢ, Z − Zᵢ⟩`.
    pub fn lower_model(&self, z: &[bool]) -> T {
        self.cuts
            .iter()
            .map(|c| c.eval(z))
            .fold(T::neg_infinity(), T::max)
    }

    pub fn contains(&self, z: &[bool]) -> bool {
        self.cuts.iter().any(|c| c.z == z)
    }

    /// Adds a cut and updates the incumbent.
    pub fn push(&mut self, cut: Cut<T>) {
        if cut.value < self.best_upper {
            self.best_upper = cut.value;
            self.incumbent = self.cuts.len();
        }
        self.cuts.push(cut);
        self.refresh_gap();
    }

    /// Raises the lower bound (never above the upper bound) and refreshes the gap.
    pub fn raise_lower(&mut self, eta: T) {
        self.best_lower = self.best_lower.max(eta).min(self.best_upper);
        self.refresh_gap();
    }

    fn refresh_gap(&mut self) {
        self.best_lower = self.best_lower.min(self.best_upper);
        self.gap = if self.best_upper <= T::lit(GAP_ZERO) {
            T::zero()
        } else {
            (self.best_upper - self.best_lower) / self.best_upper
        };
    }
}

/// Upper bounds at or below this count as a zero objective (gap 0).
pub const GAP_ZERO: f64 = 1e-12;

/// Binary pattern as a `0/1` matrix.
pub fn pattern_matrix<T: Real>(z: &[bool], k: usize, n: usize) -> DenseMatrix<T> {
    DenseMatrix::from_fn(k, n, |i, j| if z[i * n + j] { T::one() } else { T::zero() })
}
