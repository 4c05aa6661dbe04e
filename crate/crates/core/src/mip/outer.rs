//! Outer approximation over support patterns and the λ-continuation driver.

use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::milp::{BranchAndBound, MilpBackend};
use super::{eval_f, norm_bound_b, pattern_matrix, subgradient_f, Cut, CutSet, FOptions, RoundLog, GAP_ZERO};
use crate::config::SaaConfig;
use crate::error::{Result, SaaError};
use crate::matrix::DenseMatrix;
use crate::projection::{clamp_nonneg, top_indices};
use crate::rng::{random_row_stochastic, rng_from_seed};
use crate::solver::{solve_at, step_w, Factorization, SolveTrace};
use crate::Real;

/// Settings for the outer-approximation loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MipConfig {
    /// Stop once `(UB − LB)/UB` falls to this.
    pub tol_gap: f64,
    pub max_rounds: usize,
    pub f_tol: f64,
    pub f_max_iter: usize,
    /// Branch-and-bound node budget per MILP; `None` solves exactly.
    pub node_limit: Option<usize>,
    /// Wall-clock budget for the whole loop, in seconds.
    pub time_budget: Option<f64>,
}

impl Default for MipConfig {
    fn default() -> Self {
        Self {
            tol_gap: 1e-4,
            max_rounds: 100,
            f_tol: super::DEFAULT_F_TOL,
            f_max_iter: super::DEFAULT_F_MAX_ITER,
            node_limit: None,
            time_budget: None,
        }
    }
}

impl MipConfig {
    fn f_options(&self) -> FOptions {
        FOptions {
            tol: self.f_tol,
            max_iter: self.f_max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct OuterResult<T> {
    /// Incumbent pattern, row-major.
    pub z: Vec<bool>,
    pub h: DenseMatrix<T>,
    pub wt: DenseMatrix<T>,
    pub cuts: CutSet<T>,
}

/// Support of `P_ℓ(max{W̃₀X, 0})` where the rows of `W̃₀` pick `k` data
/// rows by farthest-point traversal (largest norm first).
///
/// A uniform `W̃₀` gives `k` identical rows, and the pattern problem has no
/// term that would ever pull them apart.
pub fn initial_pattern<T: Real>(x: &DenseMatrix<T>, k: usize, ell: usize) -> Vec<bool> {
    let (m, n) = x.shape();
    let picks = farthest_rows(x, k);
    let img = clamp_nonneg(&DenseMatrix::from_fn(k, n, |i, j| x.row(picks[i % m.max(1)])[j]));
    let mut z = vec![false; k * n];
    for p in top_indices(img.as_slice(), ell) {
        if img.as_slice()[p] > T::zero() {
            z[p] = true;
        }
    }
    z
}

/// `k` row indices: the largest-norm row, then repeatedly the row farthest
/// from those already taken. Repeats are allowed once every row is taken.
fn farthest_rows<T: Real>(x: &DenseMatrix<T>, k: usize) -> Vec<usize> {
    let m = x.rows();
    if m == 0 {
        return vec![0; k];
    }
    let norms = x.row_norms();
    let argmax = |v: &[T]| {
        (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
    };
    let mut picks = vec![argmax(&norms)];
    let dist = |a: usize, b: usize| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum::<T>()
    };
    let mut near: Vec<T> = (0..m).map(|r| dist(r, picks[0])).collect();
    while picks.len() < k {
        let next = if picks.len() < m { argmax(&near) } else { picks[picks.len() % m] };
        picks.push(next);
        for (r, d) in near.iter_mut().enumerate() {
            *d = d.min(dist(r, next));
        }
    }
    picks
}

/// Minimizes `F` over patterns with `Σ Z ≤ ℓ` by alternating `F`
/// evaluations, subgradient cuts and the cut MILP.
pub fn outer_approximation<T: Real>(
    x: &DenseMatrix<T>,
    cfg: &SaaConfig,
    mip: &MipConfig,
) -> Result<OuterResult<T>> {
    outer_approximation_with(x, cfg, mip, &BranchAndBound { node_limit: mip.node_limit })
}

/// [`outer_approximation`] with a caller-supplied MILP backend.
pub fn outer_approximation_with<T: Real, B: MilpBackend>(
    x: &DenseMatrix<T>,
    cfg: &SaaConfig,
    mip: &MipConfig,
    backend: &B,
) -> Result<OuterResult<T>> {
    if !(mip.tol_gap > 0.0) {
        return Err(SaaError::invalid("tol_gap must be positive"));
    }
    let (_, n) = x.shape();
    let (k, ell) = (cfg.k, cfg.ell);
    let start = Instant::now();
    let budget = mip.time_budget.map(Duration::from_secs_f64);
    let b = norm_bound_b(x, k)?;
    let opts = mip.f_options();

    let mut cuts = CutSet::new(k, n, ell);
    let mut z = initial_pattern(x, k, ell);
    let first = eval_f(&pattern_matrix(&z, k, n), x, ell, b, opts)?;
    let mut best = (z.clone(), first.h.clone(), first.wt.clone());
    cuts.push(Cut {
        z: z.clone(),
        value: first.value,
        grad: subgradient_f(&first.h, &first.wt, x, b)?,
    });
    log_round(&mut cuts, 0, Some(first.value), &z, 0);

    for round in 1..=mip.max_rounds {
        if cuts.gap <= T::lit(mip.tol_gap) || cuts.best_upper <= T::lit(GAP_ZERO) {
            break;
        }
        if budget.is_some_and(|t| start.elapsed() >= t) {
            info!("outer approximation: time budget reached after {} rounds", round - 1);
            break;
        }
        let sol = backend.solve(&cuts)?;
        cuts.raise_lower(sol.lower_bound);
        if cuts.gap <= T::lit(mip.tol_gap) || cuts.contains(&sol.z) {
            log_round(&mut cuts, round, None, &sol.z, sol.nodes);
            break;
        }
        z = sol.z;
        let f = eval_f(&pattern_matrix(&z, k, n), x, ell, b, opts)?;
        if f.value < cuts.best_upper {
            best = (z.clone(), f.h.clone(), f.wt.clone());
        }
        cuts.push(Cut {
            z: z.clone(),
            value: f.value,
            grad: subgradient_f(&f.h, &f.wt, x, b)?,
        });
        log_round(&mut cuts, round, Some(f.value), &z, sol.nodes);
        debug!(
            "outer approximation round {round}: F = {}, bounds [{}, {}]",
            f.value, cuts.best_lower, cuts.best_upper
        );
    }
    let (z, h, wt) = best;
    Ok(OuterResult { z, h, wt, cuts })
}

fn log_round<T: Real>(cuts: &mut CutSet<T>, round: usize, value: Option<T>, z: &[bool], nodes: usize) {
    let log = RoundLog {
        round,
        value: value.map(Real::to_f64_lossy),
        ones: z.iter().filter(|v| **v).count(),
        best_upper: cuts.best_upper.to_f64_lossy(),
        best_lower: cuts.best_lower.to_f64_lossy(),
        gap: cuts.gap.to_f64_lossy(),
        milp_nodes: nodes,
    };
    cuts.rounds.push(log);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ContinuationOutput<T> {
    pub fac: Factorization<T>,
    pub outer: OuterResult<T>,
    /// The starting point built from the outer-approximation output.
    pub init: Factorization<T>,
    /// One trace per λ, in schedule order.
    pub traces: Vec<(f64, SolveTrace<T>)>,
}

/// Starting point `(H*, W, W̃*)` with `W` one gradient step from a seeded
/// random row-stochastic matrix.
///
/// The pattern problem is symmetric across rows of `H`, so its optimum often
/// repeats one archetype `k` times. A uniform `W` would keep those copies
/// identical through every block update; a random `W` lets them separate.
pub fn init_from_outer<T: Real>(
    x: &DenseMatrix<T>,
    outer: &OuterResult<T>,
    eps: f64,
    seed: u64,
) -> Factorization<T> {
    let (m, _) = x.shape();
    let k = outer.h.rows();
    let mut rng = rng_from_seed(seed);
    let mut fac = Factorization {
        h: outer.h.clone(),
        w: random_row_stochastic(m, k, &mut rng),
        wt: outer.wt.clone(),
    };
    fac.w = step_w(x, &fac, T::lit(eps));
    fac
}

/// Outer-approximation start followed by warm-started solves along the λ
/// schedule in `cfg`.
pub fn continuation<T: Real>(
    x: &DenseMatrix<T>,
    cfg: &SaaConfig,
    mip: &MipConfig,
) -> Result<ContinuationOutput<T>> {
    cfg.validate(x.cols())?;
    let outer = outer_approximation(x, cfg, mip)?;
    let init = init_from_outer(x, &outer, cfg.eps_safeguard, cfg.seed);
    let mut fac = init.clone();
    let mut traces = Vec::new();
    for lambda in cfg.lambda.values() {
        let (next, trace) = solve_at(x, &fac, cfg, lambda)?;
        debug!(
            "continuation λ = {lambda}: Ψ = {} after {} sweeps",
            trace.final_objective(),
            trace.iterations
        );
        fac = next;
        traces.push((lambda, trace));
    }
    Ok(ContinuationOutput {
        fac,
        outer,
        init,
        traces,
    })
}
