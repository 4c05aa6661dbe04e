//! Support-swap refinement of a solver output.
//!
//! Each round proposes one swap: the smallest nonzero of `H` leaves the
//! support (unless the budget is not yet used up) and the off-support
//! coordinate with the most negative `∂Ψ/∂H` enters. The new entry `t` and
//! the weights `(W, W̃)` are refit by alternating minimization, and the swap
//! is kept only if Ψ strictly drops.

use serde::{Deserialize, Serialize};

use crate::config::SaaConfig;
use crate::error::{Result, SaaError};
use crate::io::{fmt_f64, SCHEMA};
use crate::linalg::sigma_max_sq;
use crate::matrix::DenseMatrix;
use crate::projection::project_simplex_rows_in_place;
use crate::solver::{grad_h, objective_unchecked, Factorization};
use crate::Real;

pub type Coord = (usize, usize);

pub const DEFAULT_REFIT_TOL: f64 = 1e-9;
pub const DEFAULT_REFIT_MAX_ITER: usize = 5_000;
/// Accelerated steps per block and alternation.
pub const DEFAULT_BLOCK_ITER: usize = 25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SwapProposal<T> {
    /// `None` while `‖H‖₀ < ℓ`.
    pub leaving: Option<Coord>,
    pub entering: Coord,
    pub t_star: T,
    pub new_objective: T,
}

/// Smallest nonzero entry of `H`; ties go to the first in row-major order.
pub fn select_leaving<T: Real>(h: &DenseMatrix<T>) -> Result<Coord> {
    let mut best: Option<(usize, T)> = None;
    for (p, &v) in h.as_slice().iter().enumerate() {
        if v != T::zero() && best.is_none_or(|(_, b)| v.abs() < b) {
            best = Some((p, v.abs()));
        }
    }
    best.map(|(p, _)| (p / h.cols(), p % h.cols()))
        .ok_or_else(|| SaaError::invalid("select_leaving: H has no nonzero entry"))
}

/// Off-support coordinate with the smallest `∂Ψ/∂H`; ties go row-major.
pub fn select_entering<T: Real>(x: &DenseMatrix<T>, fac: &Factorization<T>, lambda: T) -> Result<Coord> {
    let g = grad_h(x, fac, lambda);
    let n = fac.h.cols();
    let mut best: Option<(usize, T)> = None;
    for (p, (&hv, &gv)) in fac.h.as_slice().iter().zip(g.as_slice()).enumerate() {
        if hv == T::zero() && best.is_none_or(|(_, b)| gv < b) {
            best = Some((p, gv));
        }
    }
    best.map(|(p, _)| (p / n, p % n))
        .ok_or_else(|| SaaError::invalid("select_entering: H has full support"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct OptimalT<T> {
    pub t: T,
    /// The denominator `λ + ‖W_{·,i₂}‖²` vanished; `t` is then 0.
    pub degenerate: bool,
}

/// Closed-form minimizer over `t ≥ 0` of
/// `‖X − W(H₋ + tE)‖² + λ‖H₋ + tE − W̃X‖²` with `E` the unit matrix at `(i₂, j₂)`.
pub fn optimal_t<T: Real>(
    x: &DenseMatrix<T>,
    h_minus: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    wt: &DenseMatrix<T>,
    lambda: T,
    entering: Coord,
) -> OptimalT<T> {
    let (i2, j2) = entering;
    let m = x.rows();
    let mut num = T::zero();
    let mut col_sq = T::zero();
    for r in 0..m {
        let wh: T = (0..h_minus.rows()).map(|i| w[(r, i)] * h_minus[(i, j2)]).sum();
        let u = x[(r, j2)] - wh;
        num = num + u * w[(r, i2)];
        col_sq = col_sq + w[(r, i2)] * w[(r, i2)];
    }
    let wtx: T = (0..m).map(|r| wt[(i2, r)] * x[(r, j2)]).sum();
    let v = h_minus[(i2, j2)] - wtx;
    let den = lambda + col_sq;
    if den <= T::zero() {
        return OptimalT {
            t: T::zero(),
            degenerate: true,
        };
    }
    OptimalT {
        t: ((num - lambda * v) / den).max(T::zero()),
        degenerate: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RefitOptions<T> {
    /// Stop when an alternation lowers Ψ by less than this, relatively.
    pub tol: f64,
    pub max_iter: usize,
    pub block_iter: usize,
    /// Holds `t` at this value instead of re-optimizing it.
    pub fixed_t: Option<T>,
}

impl<T> Default for RefitOptions<T> {
    fn default() -> Self {
        Self {
            tol: DEFAULT_REFIT_TOL,
            max_iter: DEFAULT_REFIT_MAX_ITER,
            block_iter: DEFAULT_BLOCK_ITER,
            fixed_t: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RefitResult<T> {
    pub fac: Factorization<T>,
    pub t: T,
    pub objective: T,
    /// Ψ at the start and after every alternation.
    pub objectives: Vec<T>,
    pub iterations: usize,
}

/// Accelerated projected gradient on `min ‖A − MB‖²` over row-stochastic `M`,
/// started at `m0`. Never returns a point worse than `m0`.
fn fit_stochastic<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, m0: &DenseMatrix<T>, iters: usize) -> DenseMatrix<T> {
    let lip = T::lit(2.0) * sigma_max_sq(b).max(T::lit(1e-12));
    let step = T::one() / lip;
    let f = |m: &DenseMatrix<T>| a.sub(&m.matmul(b)).frobenius_sq();
    let mut cur = m0.clone();
    let mut fcur = f(&cur);
    let mut y = cur.clone();
    let mut t = T::one();
    for _ in 0..iters {
        let grad = a.sub(&y.matmul(b)).matmul_t(b);
        let mut next = y.clone();
        next.axpy(T::lit(2.0) * step, &grad);
        project_simplex_rows_in_place(&mut next);
        let fnext = f(&next);
        if fnext > fcur {
            t = T::one();
            y = cur.clone();
            continue;
        }
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
        let beta = (t - T::one()) / t_next;
        y = next.zip_map(&cur, |p, q| p + beta * (p - q));
        t = t_next;
        let done = fcur - fnext <= T::lit(1e-15) * fcur.max(T::min_positive_value());
        cur = next;
        fcur = fnext;
        if done {
            break;
        }
    }
    cur
}

fn with_entry<T: Real>(h_minus: &DenseMatrix<T>, at: Coord, t: T) -> DenseMatrix<T> {
    let mut h = h_minus.clone();
    h[at] = t;
    h
}

/// Refits `(W, W̃, t)` after removing `leaving` and opening `entering`,
/// warm-started from the weights in `fac`.
pub fn swap_refit<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    lambda: T,
    leaving: Option<Coord>,
    entering: Coord,
    opts: &RefitOptions<T>,
) -> Result<RefitResult<T>> {
    let (k, n) = fac.h.shape();
    if entering.0 >= k || entering.1 >= n {
        return Err(SaaError::invalid(format!("entering coordinate {entering:?} out of range")));
    }
    let mut h_minus = fac.h.clone();
    if let Some(c) = leaving {
        h_minus[c] = T::zero();
    }
    if h_minus[entering] != T::zero() {
        return Err(SaaError::invalid(format!("entering coordinate {entering:?} is on the support")));
    }
    if let Some(t) = opts.fixed_t {
        if !(t >= T::zero()) {
            return Err(SaaError::invalid("fixed t must be ≥ 0"));
        }
    }
    let pick_t = |w: &DenseMatrix<T>, wt: &DenseMatrix<T>| {
        opts.fixed_t
            .unwrap_or_else(|| optimal_t(x, &h_minus, w, wt, lambda, entering).t)
    };
    let mut w = fac.w.clone();
    let mut wt = fac.wt.clone();
    let mut t = pick_t(&w, &wt);
    let mut cur = Factorization {
        h: with_entry(&h_minus, entering, t),
        w: w.clone(),
        wt: wt.clone(),
    };
    let mut psi = objective_unchecked(x, &cur, lambda).total;
    let mut objectives = vec![psi];
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let h = with_entry(&h_minus, entering, t);
        w = fit_stochastic(x, &h, &w, opts.block_iter);
        if lambda > T::zero() {
            wt = fit_stochastic(&h, x, &wt, opts.block_iter);
        }
        t = pick_t(&w, &wt);
        let next = Factorization {
            h: with_entry(&h_minus, entering, t),
            w: w.clone(),
            wt: wt.clone(),
        };
        let next_psi = objective_unchecked(x, &next, lambda).total;
        objectives.push(next_psi);
        let rel = (psi - next_psi) / psi.abs().max(T::min_positive_value());
        cur = next;
        psi = next_psi;
        if rel < T::lit(opts.tol) {
            break;
        }
    }
    Ok(RefitResult {
        fac: cur,
        t,
        objective: psi,
        objectives,
        iterations,
    })
}

/// One row of the swap log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub leaving: Option<Coord>,
    pub entering: Coord,
    pub t: f64,
    /// `Ψ_new − Ψ_old`; negative for accepted swaps.
    pub delta: f64,
    pub accepted: bool,
}

impl SwapRecord {
    pub const CSV_HEADER: [&'static str; 9] = [
        "schema",
        "swap",
        "leaving_i",
        "leaving_j",
        "entering_i",
        "entering_j",
        "t",
        "delta_psi",
        "accepted",
    ];

    pub fn csv_row(&self, index: usize) -> Vec<String> {
        let (li, lj) = match self.leaving {
            Some((i, j)) => (i.to_string(), j.to_string()),
            None => (String::new(), String::new()),
        };
        vec![
            SCHEMA.to_string(),
            index.to_string(),
            li,
            lj,
            self.entering.0.to_string(),
            self.entering.1.to_string(),
            fmt_f64(self.t),
            fmt_f64(self.delta),
            self.accepted.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LocalSearchOutput<T> {
    pub fac: Factorization<T>,
    pub objective: T,
    pub swaps_accepted: usize,
    /// Every proposal in order; the last is the rejected one unless the
    /// swap budget ran out or no proposal was possible.
    pub log: Vec<SwapRecord>,
}

/// The proposal rules at the current point: `(leaving, entering)`.
pub fn propose<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    lambda: T,
    ell: usize,
) -> Result<Option<(Option<Coord>, Coord)>> {
    let nnz = fac.h.nnz(T::zero());
    if nnz >= fac.h.rows() * fac.h.cols() {
        return Ok(None);
    }
    let leaving = if nnz < ell || nnz == 0 {
        None
    } else {
        Some(select_leaving(&fac.h)?)
    };
    if leaving.is_none() && nnz >= ell {
        return Ok(None);
    }
    Ok(Some((leaving, select_entering(x, fac, lambda)?)))
}

/// Proposes and refits swaps until one fails to strictly decrease Ψ or
/// `max_swaps` have been accepted.
pub fn local_search<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    cfg: &SaaConfig,
    max_swaps: usize,
) -> Result<LocalSearchOutput<T>> {
    local_search_with(x, fac, cfg, max_swaps, &RefitOptions::default())
}

pub fn local_search_with<T: Real>(
    x: &DenseMatrix<T>,
    fac: &Factorization<T>,
    cfg: &SaaConfig,
    max_swaps: usize,
    opts: &RefitOptions<T>,
) -> Result<LocalSearchOutput<T>> {
    fac.check_feasible(x, cfg.ell)?;
    let lambda = T::lit(cfg.lambda.final_value());
    let mut cur = fac.clone();
    let mut psi = objective_unchecked(x, &cur, lambda).total;
    let mut log = Vec::new();
    let mut accepted = 0;
    while accepted < max_swaps {
        let Some((leaving, entering)) = propose(x, &cur, lambda, cfg.ell)? else {
            break;
        };
        let refit = swap_refit(x, &cur, lambda, leaving, entering, opts)?;
        let ok = refit.objective < psi;
        log.push(SwapRecord {
            leaving,
            entering,
            t: refit.t.to_f64_lossy(),
            delta: (refit.objective - psi).to_f64_lossy(),
            accepted: ok,
        });
        if !ok {
            break;
        }
        cur = refit.fac;
        psi = refit.objective;
        accepted += 1;
    }
    Ok(LocalSearchOutput {
        fac: cur,
        objective: psi,
        swaps_accepted: accepted,
        log,
    })
}

/// Ψ with `H = H₋ + tE` at fixed `(W, W̃)`, the function `optimal_t` minimizes.
pub fn swap_objective<T: Real>(
    x: &DenseMatrix<T>,
    h_minus: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    wt: &DenseMatrix<T>,
    lambda: T,
    entering: Coord,
    t: T,
) -> T {
    let fac = Factorization {
        h: with_entry(h_minus, entering, t),
        w: w.clone(),
        wt: wt.clone(),
    };
    objective_unchecked(x, &fac, lambda).total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn leaving_examples() {
        assert_eq!(select_leaving(&m(&[&[3.0, 0.0], &[0.0, 1.0]])).unwrap(), (1, 1));
        assert_eq!(select_leaving(&m(&[&[0.0, 0.0], &[0.0, 2.0]])).unwrap(), (1, 1));
        assert_eq!(select_leaving(&m(&[&[1.0, 1.0]])).unwrap(), (0, 0));
        assert!(select_leaving(&DenseMatrix::<f64>::zeros(2, 2)).is_err());
    }

    #[test]
    fn entering_needs_an_off_support_coordinate() {
        let x = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let fac = Factorization {
            h: m(&[&[1.0, 0.5], &[0.2, 0.0]]),
            w: DenseMatrix::identity(2),
            wt: DenseMatrix::identity(2),
        };
        assert_eq!(select_entering(&x, &fac, 1.0).unwrap(), (1, 1));
        let full = Factorization {
            h: m(&[&[1.0, 0.5], &[0.2, 0.1]]),
            ..fac
        };
        assert!(select_entering(&x, &full, 1.0).is_err());
    }

    #[test]
    fn optimal_t_examples() {
        // X = WH and H = W̃X with the entering coordinate already matching
        let x = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let h = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let w = DenseMatrix::identity(2);
        let r = optimal_t(&x, &h, &w, &w, 1.0, (1, 1));
        assert_eq!(r.t, 0.0);
        // the data want a negative entry: clipped
        let r = optimal_t(&x, &h, &w, &w, 1.0, (0, 1));
        assert_eq!(r.t, 0.0);
        let z = DenseMatrix::<f64>::zeros(2, 2);
        let r = optimal_t(&x, &h, &z, &z, 0.0, (1, 0));
        assert!(r.degenerate);
    }

    #[test]
    fn refit_with_itself_restores_objective() {
        let x = m(&[&[1.0, 0.2, 0.0], &[0.1, 0.9, 0.3], &[0.5, 0.5, 0.5]]);
        let fac = crate::solver::default_init(&x, 2, 3);
        let psi = objective_unchecked(&x, &fac, 2.0).total;
        let leave = select_leaving(&fac.h).unwrap();
        let opts = RefitOptions {
            fixed_t: Some(fac.h[leave]),
            ..RefitOptions::default()
        };
        let r = swap_refit(&x, &fac, 2.0, Some(leave), leave, &opts).unwrap();
        assert!(r.objective <= psi + 1e-12);
        assert!(r.objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
