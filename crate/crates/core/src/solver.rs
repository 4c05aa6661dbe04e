//! Block proximal-gradient descent for the penalized problem
//!
//! ```text
//! min Ψ(W, W̃, H) = ‖X − WH‖²_F + λ‖H − W̃X‖²_F
//! s.t. H ≥ 0, ‖H‖₀ ≤ ℓ, W and W̃ row-stochastic.
//! ```
//!
//! Each sweep updates `H`, then `W`, then `W̃` by a projected gradient step of
//! size `1/(2L)` with the block Lipschitz constants
//! `L₁(W) = 2(λ + σ_max(W)²)`, `L₂(H) = 2 max{σ_max(H)², ε}` and
//! `L₃(X) = 2λσ_max(X)²`, each evaluated at the freshest iterate.

use serde::{Deserialize, Serialize};

use crate::config::{LambdaSpec, SaaConfig};
use crate::error::{Result, SaaError};
use crate::io::{fmt_f64, SCHEMA};
use crate::linalg::sigma_max_sq;
use crate::matrix::DenseMatrix;
use crate::projection::{project_nonneg_sparse, project_simplex_rows_in_place};
use crate::rng::{random_row_stochastic, rng_from_seed};
use crate::Real;

/// Row sums of `W`, `W̃` must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Solver state `(H, W, W̃)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Factorization<T> {
    /// Archetypes, `k × n`.
    pub h: DenseMatrix<T>,
    /// Data weights, `m × k`.
    pub w: DenseMatrix<T>,
    /// Archetype weights over data rows, `k × m`.
    pub wt: DenseMatrix<T>,
}

impl<T: Real> Factorization<T> {
    pub fn k(&self) -> usize {
        self.h.rows()
    }

    /// Checks shapes against `x` and every feasibility constraint.
    pub fn check_feasible(&self, x: &DenseMatrix<T>, ell: usize) -> Result<()> {
        let (m, n) = x.shape();
        let k = self.h.rows();
        if self.h.cols() != n || self.w.shape() != (m, k) || self.wt.shape() != (k, m) {
            return Err(SaaError::shape(
                "factorization",
                format!("H {k}x{n}, W {m}x{k}, W̃ {k}x{m}"),
                format!(
                    "H {:?}, W {:?}, W̃ {:?}",
                    self.h.shape(),
                    self.w.shape(),
                    self.wt.shape()
                ),
            ));
        }
        if self.h.min_value() < T::zero() {
            return Err(SaaError::invalid("H has negative entries"));
        }
        let nnz = self.h.nnz(T::zero());
        if nnz > ell {
            return Err(SaaError::invalid(format!("‖H‖₀ = {nnz} exceeds ell = {ell}")));
        }
        for (name, mat) in [("W", &self.w), ("W̃", &self.wt)] {
            if mat.min_value() < T::zero() {
                return Err(SaaError::invalid(format!("{name} has negative entries")));
            }
            for (i, s) in mat.row_sums().into_iter().enumerate() {
                if (s - T::one()).abs() > T::lit(ROW_SUM_TOL) {
                    return Err(SaaError::invalid(format!(
                        "row {i} of {name} sums to {s}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `W`, `W̃` with uniform rows and `H = P_ℓ(max{W̃X, 0})`.
pub fn default_init<T: Real>(x: &DenseMatrix<T>, k: usize, ell: usize) -> Factorization<T> {
    let (m, _) = x.shape();
    let w = DenseMatrix::filled(m, k, T::one() / T::lit(k as f64));
    let wt = DenseMatrix::filled(k, m, T::one() / T::lit(m as f64));
    let h = project_nonneg_sparse(&wt.matmul(x), ell);
    Factorization { h, w, wt }
}

/// `H = 0` with seeded random row-stochastic `W` and `W̃`.
pub fn zero_init<T: Real>(x: &DenseMatrix<T>, k: usize, seed: u64) -> Factorization<T> {
    let (m, n) = x.shape();
    let mut rng = rng_from_seed(seed);
    let w = random_row_stochastic(m, k, &mut rng);
    let wt = random_row_stochastic(k, m, &mut rng);
    Factorization {
        h: DenseMatrix::zeros(k, n),
        w,
        wt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ObjectiveBreakdown<T> {
    /// `‖X − WH‖²_F`.
    pub fit: T,
    /// `‖H − W̃X‖²_F`.
    pub reg: T,
    /// `fit + λ·reg`.
    pub total: T,
}

fn check_shapes<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>) -> Result<()> {
    let (m, n) = x.shape();
    let k = fac.h.rows();
    if fac.h.cols() != n || fac.w.shape() != (m, k) || fac.wt.shape() != (k, m) {
        return Err(SaaError::shape(
            "objective",
            format!("H {k}x{n}, W {m}x{k}, W̃ {k}x{m}"),
            format!(
                "H {:?}, W {:?}, W̃ {:?}",
                fac.h.shape(),
                fac.w.shape(),
                fac.wt.shape()
            ),
        ));
    }
    Ok(())
}

pub fn objective<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    lambda: T,
) -> Result<ObjectiveBreakdown<T>> {
    check_shapes(x, fac)?;
    Ok(objective_unchecked(x, fac, lambda))
}

pub(crate) fn objective_unchecked<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    lambda: T,
) -> ObjectiveBreakdown<T> {
    let fit = x.sub(&fac.w.matmul(&fac.h)).frobenius_sq();
    let reg = fac.h.sub(&fac.wt.matmul(x)).frobenius_sq();
    ObjectiveBreakdown {
        fit,
        reg,
        total: fit + lambda * reg,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LipschitzConstants<T> {
    pub l1: T,
    pub l2: T,
    /// Zero when `λ = 0`; the `W̃` block is then skipped.
    pub l3: T,
}

pub fn lipschitz_constants<T: Real>(
    w: &DenseMatrix<T>,
    h: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    lambda: T,
    eps: T,
) -> LipschitzConstants<T> {
    let two = T::lit(2.0);
    LipschitzConstants {
        l1: l1(w, lambda),
        l2: l2(h, eps),
        l3: two * lambda * sigma_max_sq(x),
    }
}

fn l1<T: Real>(w: &DenseMatrix<T>, lambda: T) -> T {
    T::lit(2.0) * (lambda + sigma_max_sq(w))
}

fn l2<T: Real>(h: &DenseMatrix<T>, eps: T) -> T {
    T::lit(2.0) * sigma_max_sq(h).max(eps)
}

/// `−Wᵀ(X − WH) + λ(H − W̃X)`, half of `∇_H Ψ`.
fn half_grad_h<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T) -> DenseMatrix<T> {
    let resid = x.sub(&fac.w.matmul(&fac.h));
    let mut g = fac.w.t_matmul(&resid).scale(-T::one());
    g.axpy(lambda, &fac.h.sub(&fac.wt.matmul(x)));
    g
}

/// `∇_H Ψ = −2Wᵀ(X − WH) + 2λ(H − W̃X)`.
pub fn grad_h<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T) -> DenseMatrix<T> {
    half_grad_h(x, fac, lambda).scale(T::lit(2.0))
}

/// `∇_W Ψ = −2(X − WH)Hᵀ`.
pub fn grad_w<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>) -> DenseMatrix<T> {
    x.sub(&fac.w.matmul(&fac.h))
        .matmul_t(&fac.h)
        .scale(T::lit(-2.0))
}

/// `∇_W̃ Ψ = −2λ(H − W̃X)Xᵀ`.
pub fn grad_wt<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T) -> DenseMatrix<T> {
    fac.h
        .sub(&fac.wt.matmul(x))
        .matmul_t(x)
        .scale(T::lit(-2.0) * lambda)
}

/// `H` update: `P_ℓ(max{H − (1/L₁(W))·½∇_H Ψ, 0})`.
pub fn step_h<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T, ell: usize) -> DenseMatrix<T> {
    project_nonneg_sparse(&h_candidate(x, fac, lambda), ell)
}

/// `H − (1/L₁(W))·½∇_H Ψ` before projection.
fn h_candidate<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T) -> DenseMatrix<T> {
    let mut pi = fac.h.clone();
    pi.axpy(-T::one() / l1(&fac.w, lambda), &half_grad_h(x, fac, lambda));
    pi
}

/// `W` update: `P_simplex(W + (1/L₂(H))(X − WH)Hᵀ)`, a descent step on Ψ.
pub fn step_w<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, eps: T) -> DenseMatrix<T> {
    step_w_with(x, fac, l2(&fac.h, eps))
}

fn step_w_with<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, l2: T) -> DenseMatrix<T> {
    let resid = x.sub(&fac.w.matmul(&fac.h));
    let mut w = fac.w.clone();
    w.axpy(T::one() / l2, &resid.matmul_t(&fac.h));
    project_simplex_rows_in_place(&mut w);
    w
}

/// `W̃` update: `P_simplex(W̃ + λ(1/L₃(X))(H − W̃X)Xᵀ)`; identity when `λ = 0`.
pub fn step_wt<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T) -> DenseMatrix<T> {
    let l3 = T::lit(2.0) * lambda * sigma_max_sq(x);
    step_wt_with(x, fac, lambda, l3)
}

fn step_wt_with<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T, l3: T) -> DenseMatrix<T> {
    if lambda <= T::zero() || l3 <= T::zero() {
        return fac.wt.clone();
    }
    let resid = fac.h.sub(&fac.wt.matmul(x));
    let mut wt = fac.wt.clone();
    wt.axpy(lambda / l3, &resid.matmul_t(x));
    project_simplex_rows_in_place(&mut wt);
    wt
}

/// Per-iteration record of a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SolveTrace<T> {
    /// `Ψ` of the initial point followed by `Ψ` after every accepted sweep.
    pub objectives: Vec<T>,
    pub fits: Vec<T>,
    pub regs: Vec<T>,
    /// `(1/2L₁, 1/2L₂, 1/2L₃)` per sweep; the last entry is zero when `λ = 0`.
    pub step_sizes: Vec<[T; 3]>,
    /// Sweeps computed, including the final one that certified stationarity.
    pub iterations: usize,
    pub converged: bool,
    pub stationarity_residual: T,
    /// Whether the thresholded point `T` has a tie at the ℓ-th largest entry.
    pub tie_at_budget: bool,
}

impl<T: Real> SolveTrace<T> {
    pub fn final_objective(&self) -> T {
        *self.objectives.last().expect("trace has the initial objective")
    }

    /// Rows `schema, iteration, fit, reg, total` for CSV export.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.objectives.len())
            .map(|i| {
                vec![
                    SCHEMA.to_string(),
                    i.to_string(),
                    fmt_f64(self.fits[i].to_f64_lossy()),
                    fmt_f64(self.regs[i].to_f64_lossy()),
                    fmt_f64(self.objectives[i].to_f64_lossy()),
                ]
            })
            .collect()
    }

    pub const CSV_HEADER: [&'static str; 5] = ["schema", "iteration", "fit", "reg", "total"];

    /// Largest relative increase of Ψ between consecutive entries.
    pub fn max_relative_increase(&self) -> T {
        self.objectives
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(T::min_positive_value()))
            .fold(T::zero(), T::max)
    }
}

/// One sweep of the three block updates.
struct Sweeper<'a, T> {
    x: &'a DenseMatrix<T>,
    lambda: T,
    ell: usize,
    eps: T,
    l3: T,
}

struct SweepOutcome<T> {
    next: Factorization<T>,
    /// Frobenius change of `H`, `W`, `W̃`.
    changes: [T; 3],
    steps: [T; 3],
}

impl<'a, T: Real> Sweeper<'a, T> {
    fn new(x: &'a DenseMatrix<T>, lambda: T, ell: usize, eps: T) -> Self {
        Self {
            x,
            lambda,
            ell,
            eps,
            l3: T::lit(2.0) * lambda * sigma_max_sq(x),
        }
    }

    fn sweep(&self, cur: &Factorization<T>) -> SweepOutcome<T> {
        let two = T::lit(2.0);
        let l1 = l1(&cur.w, self.lambda);
        let h = step_h(self.x, cur, self.lambda, self.ell);
        let mut next = Factorization {
            h,
            w: cur.w.clone(),
            wt: cur.wt.clone(),
        };
        let l2 = l2(&next.h, self.eps);
        next.w = step_w_with(self.x, &next, l2);
        next.wt = step_wt_with(self.x, &next, self.lambda, self.l3);
        let changes = [
            next.h.distance(&cur.h),
            next.w.distance(&cur.w),
            next.wt.distance(&cur.wt),
        ];
        let inv = |l: T| if l > T::zero() { T::one() / (two * l) } else { T::zero() };
        SweepOutcome {
            next,
            changes,
            steps: [inv(l1), inv(l2), inv(self.l3)],
        }
    }
}

/// Result of the fixed-point test at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct StationarityReport<T> {
    /// Largest Frobenius block change under one sweep.
    pub residual: T,
    pub block_changes: [T; 3],
    pub tie_at_budget: bool,
}

/// Whether the ℓ-th and (ℓ+1)-th largest entries of
/// `max{0, H − (1/L₁(W))·½∇_H Ψ}` coincide, when more than ℓ are positive.
fn tie_at_budget<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T, ell: usize) -> bool {
    let mut t: Vec<T> = h_candidate(x, fac, lambda)
        .as_slice()
        .iter()
        .map(|v| v.max(T::zero()))
        .filter(|v| *v > T::zero())
        .collect();
    if ell == 0 || t.len() <= ell {
        return false;
    }
    t.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (a, b) = (t[ell - 1], t[ell]);
    a - b <= T::lit(1e-12) * a.max(T::one())
}

fn single_lambda(spec: &LambdaSpec) -> Result<f64> {
    match spec {
        LambdaSpec::Single(v) => Ok(*v),
        LambdaSpec::Schedule(v) if v.len() == 1 => Ok(v[0]),
        LambdaSpec::Schedule(_) => Err(SaaError::invalid(
            "solve takes a single lambda; use continuation for a schedule",
        )),
    }
}

/// Applies one sweep from `fac` and reports how far it moves.
pub fn stationarity_residual<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    cfg: &SaaConfig,
) -> Result<StationarityReport<T>> {
    check_shapes(x, fac)?;
    let lambda = T::lit(single_lambda(&cfg.lambda)?);
    let sweeper = Sweeper::new(x, lambda, cfg.ell, T::lit(cfg.eps_safeguard));
    let out = sweeper.sweep(fac);
    Ok(StationarityReport {
        residual: out.changes.iter().copied().fold(T::zero(), T::max),
        block_changes: out.changes,
        tie_at_budget: tie_at_budget(x, fac, lambda, cfg.ell),
    })
}

/// Runs block sweeps from `init` at the single λ in `cfg`.
///
/// Stops once a sweep both decreases Ψ by less than `tol_objective` (relative)
/// and moves every block by less than `tol_stationary`; the point that sweep
/// started from is returned, so its stationarity residual is exactly that
/// sweep's largest block change.
pub fn solve<T: Real>(
    x: &DenseMatrix<T>,
    init: &Factorization<T>,
    cfg: &SaaConfig,
) -> Result<(Factorization<T>, SolveTrace<T>)> {
    let lambda = single_lambda(&cfg.lambda)?;
    solve_at(x, init, cfg, lambda)
}

/// [`solve`] with λ given explicitly (the schedule in `cfg` is ignored).
pub fn solve_at<T: Real>(
    x: &DenseMatrix<T>,
    init: &Factorization<T>,
    cfg: &SaaConfig,
    lambda: f64,
) -> Result<(Factorization<T>, SolveTrace<T>)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SaaError::invalid("lambda must be finite and ≥ 0"));
    }
    init.check_feasible(x, cfg.ell)?;
    let lam = T::lit(lambda);
    let tol_obj = T::lit(cfg.tol_objective);
    let tol_stat = T::lit(cfg.tol_stationary);
    let sweeper = Sweeper::new(x, lam, cfg.ell, T::lit(cfg.eps_safeguard));

    let mut cur = init.clone();
    let mut psi = objective_unchecked(x, &cur, lam);
    let mut trace = SolveTrace {
        objectives: vec![psi.total],
        fits: vec![psi.fit],
        regs: vec![psi.reg],
        ..SolveTrace::default()
    };
    let mut last_change = T::infinity();
    for iter in 1..=cfg.max_iter.max(1) {
        let out = sweeper.sweep(&cur);
        trace.iterations = iter;
        let next_psi = objective_unchecked(x, &out.next, lam);
        let max_change = out.changes.iter().copied().fold(T::zero(), T::max);
        let rel_decrease = (psi.total - next_psi.total) / psi.total.abs().max(T::min_positive_value());
        last_change = max_change;
        if max_change < tol_stat && rel_decrease < tol_obj {
            trace.converged = true;
            break;
        }
        if iter == cfg.max_iter {
            // out of budget: keep the newest point and certify it below
            cur = out.next;
            psi = next_psi;
            push(&mut trace, psi, out.steps);
            last_change = T::infinity();
            break;
        }
        cur = out.next;
        psi = next_psi;
        push(&mut trace, psi, out.steps);
    }
    if !trace.converged || last_change.is_infinite() {
        let probe = sweeper.sweep(&cur);
        last_change = probe.changes.iter().copied().fold(T::zero(), T::max);
        trace.converged = last_change < tol_stat;
    }
    trace.stationarity_residual = last_change;
    trace.tie_at_budget = tie_at_budget(x, &cur, lam, cfg.ell);
    Ok((cur, trace))
}

fn push<T: Real>(trace: &mut SolveTrace<T>, psi: ObjectiveBreakdown<T>, steps: [T; 3]) {
    trace.objectives.push(psi.total);
    trace.fits.push(psi.fit);
    trace.regs.push(psi.reg);
    trace.step_sizes.push(steps);
}
