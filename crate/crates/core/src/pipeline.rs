//! The composed fit: initialization, λ-continuation, optional local search,
//! and seed/grid sweeps built on top of it.

use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SaaConfig;
use crate::error::{Result, SaaError};
use crate::eval::{robustness_report, synth_instance};
use crate::io::{fmt_f64, SCHEMA};
use crate::local_search::{local_search_with, RefitOptions, SwapRecord};
use crate::matrix::DenseMatrix;
use crate::mip::outer::init_from_outer;
use crate::mip::{outer_approximation, CutSet, MipConfig};
use crate::rng::derive_seed;
use crate::solver::{objective, solve_at, zero_init, Factorization, ObjectiveBreakdown, SolveTrace};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// `H = 0` with random weights, solved once at the final λ.
    Zero,
    /// Outer approximation, then the whole λ schedule.
    #[default]
    Mip,
}

impl std::str::FromStr for InitKind {
    type Err = SaaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "mip" => Ok(Self::Mip),
            _ => Err(SaaError::invalid(format!("unknown init {s:?}; use zero or mip"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub init: InitKind,
    pub local_search: bool,
    pub max_swaps: usize,
    pub refit_tol: f64,
    pub refit_max_iter: usize,
    pub mip: MipConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            init: InitKind::Mip,
            local_search: true,
            max_swaps: 1000,
            refit_tol: crate::local_search::DEFAULT_REFIT_TOL,
            refit_max_iter: crate::local_search::DEFAULT_REFIT_MAX_ITER,
            mip: MipConfig::default(),
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub init: f64,
    pub solve: f64,
    pub local_search: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FitOutput<T> {
    pub fac: Factorization<T>,
    /// At the final λ.
    pub objective: ObjectiveBreakdown<T>,
    /// Ψ at the final λ before local search.
    pub objective_before_search: T,
    pub traces: Vec<(f64, SolveTrace<T>)>,
    pub cuts: Option<CutSet<T>>,
    pub swaps: Vec<SwapRecord>,
    pub swaps_accepted: usize,
    pub timings: StageTimings,
}

/// Fits `x` with the stages selected in `opts`.
pub fn fit<T: Real>(x: &DenseMatrix<T>, cfg: &SaaConfig, opts: &FitOptions) -> Result<FitOutput<T>> {
    let (_, n) = x.shape();
    cfg.validate(n)?;
    if x.is_empty() || !x.is_finite() {
        return Err(SaaError::invalid("data must be nonempty and finite"));
    }
    if cfg.ell == 0 && cfg.k > 0 && x.frobenius_sq() > T::zero() {
        return Err(SaaError::invalid(
            "ell = 0 forces H = 0, which cannot fit nonzero data; raise --ell",
        ));
    }
    let final_lambda = cfg.lambda.final_value();
    let mut timings = StageTimings::default();

    let t0 = Instant::now();
    let (init, schedule, cuts) = match opts.init {
        InitKind::Zero => (zero_init(x, cfg.k, cfg.seed), vec![final_lambda], None),
        InitKind::Mip => {
            let outer = outer_approximation(x, cfg, &opts.mip)?;
            let init = init_from_outer(x, &outer, cfg.eps_safeguard, cfg.seed);
            (init, cfg.lambda.values(), Some(outer.cuts))
        }
    };
    timings.init = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut fac = init;
    let mut traces = Vec::with_capacity(schedule.len());
    for lambda in schedule {
        let (next, trace) = solve_at(x, &fac, cfg, lambda)?;
        if !trace.converged {
            info!("solve at λ = {lambda} stopped at max_iter with residual {}", trace.stationarity_residual);
        }
        fac = next;
        traces.push((lambda, trace));
    }
    timings.solve = t1.elapsed().as_secs_f64();
    let lam = T::lit(final_lambda);
    let objective_before_search = objective(x, &fac, lam)?.total;

    let t2 = Instant::now();
    let (swaps, swaps_accepted) = if opts.local_search {
        let refit = RefitOptions {
            tol: opts.refit_tol,
            max_iter: opts.refit_max_iter,
            ..RefitOptions::default()
        };
        let ls = local_search_with(x, &fac, &cfg.with_lambda(final_lambda), opts.max_swaps, &refit)?;
        fac = ls.fac;
        (ls.log, ls.swaps_accepted)
    } else {
        (Vec::new(), 0)
    };
    timings.local_search = t2.elapsed().as_secs_f64();
    if !fac.h.is_finite() || !fac.w.is_finite() || !fac.wt.is_finite() {
        return Err(SaaError::Numerical("fit produced non-finite entries".into()));
    }
    Ok(FitOutput {
        objective: objective(x, &fac, lam)?,
        fac,
        objective_before_search,
        traces,
        cuts,
        swaps,
        swaps_accepted,
        timings,
    })
}

/// A synthetic-data experiment grid. `ell` values are fractions of `n·k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub zero_frac: f64,
    pub sigmas: Vec<f64>,
    pub ell_fracs: Vec<f64>,
    pub seeds: Vec<u64>,
    pub cfg: SaaConfig,
    pub fit: FitOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub sigma_z: f64,
    pub ell: usize,
    pub ell_frac: f64,
    pub weak: f64,
    pub strong: f64,
    pub delta: f64,
    pub psi: f64,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 9] =
        ["schema", "seed", "sigma_z", "ell", "ell_frac", "weak", "strong", "delta", "psi"];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            SCHEMA.to_string(),
            self.seed.to_string(),
            fmt_f64(self.sigma_z),
            self.ell.to_string(),
            fmt_f64(self.ell_frac),
            fmt_f64(self.weak),
            fmt_f64(self.strong),
            fmt_f64(self.delta),
            fmt_f64(self.psi),
        ]
    }
}

/// Mean of each column over seeds at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMean {
    pub sigma_z: f64,
    pub ell_frac: f64,
    pub seeds: usize,
    pub weak: f64,
    pub strong: f64,
    pub psi: f64,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.ell_fracs.is_empty() || self.seeds.is_empty() {
            return Err(SaaError::invalid("sweep grids must be nonempty"));
        }
        if self.ell_fracs.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(SaaError::invalid("ell fractions must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn ell_for(&self, frac: f64) -> usize {
        ((frac * (self.n * self.k) as f64).round() as usize).max(1)
    }
}

/// Runs every `(σ_z, ℓ, seed)` point; rows come back in grid order
/// (σ outermost, seed innermost) regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut grid = Vec::new();
    for &sigma in &spec.sigmas {
        for &frac in &spec.ell_fracs {
            for &seed in &spec.seeds {
                grid.push((sigma, frac, seed));
            }
        }
    }
    grid.par_iter()
        .map(|&(sigma, frac, seed)| {
            let inst = synth_instance::<f64>(spec.m, spec.n, spec.k, sigma, spec.zero_frac, seed)?;
            let ell = spec.ell_for(frac);
            let mut cfg = spec.cfg.clone();
            cfg.k = spec.k;
            cfg.ell = ell;
            cfg.seed = derive_seed(seed, 1);
            let out = fit(&inst.x, &cfg, &spec.fit)?;
            let rep = robustness_report(&inst.h0, &out.fac.h, &inst.x0, &inst.z, ell)?;
            Ok(SweepRow {
                seed,
                sigma_z: sigma,
                ell,
                ell_frac: frac,
                weak: rep.weak,
                strong: rep.strong,
                delta: rep.delta,
                psi: out.objective.total,
            })
        })
        .collect()
}

/// Per-grid-point means, in first-appearance order.
pub fn sweep_means(rows: &[SweepRow]) -> Vec<SweepMean> {
    let mut out: Vec<(SweepMean, usize)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(s, _)| s.sigma_z == r.sigma_z && s.ell_frac == r.ell_frac)
        {
            Some((s, c)) => {
                s.weak += r.weak;
                s.strong += r.strong;
                s.psi += r.psi;
                *c += 1;
            }
            None => out.push((
                SweepMean {
                    sigma_z: r.sigma_z,
                    ell_frac: r.ell_frac,
                    seeds: 0,
                    weak: r.weak,
                    strong: r.strong,
                    psi: r.psi,
                },
                1,
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, c)| {
            let cf = c as f64;
            s.seeds = c;
            s.weak /= cf;
            s.strong /= cf;
            s.psi /= cf;
            s
        })
        .collect()
}
