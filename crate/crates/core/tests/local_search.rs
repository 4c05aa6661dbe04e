mod common;

use common::*;
use proptest::prelude::*;
use saa_core::eval::synth_instance;
use saa_core::local_search::{
    local_search, optimal_t, propose, select_entering, select_leaving, swap_objective, swap_refit,
    RefitOptions,
};
use saa_core::solver::{grad_h, solve, zero_init, Factorization};
use saa_core::SaaConfig;

fn point(seed: u64) -> (M, Factorization<f64>, f64) {
    let mut r = rng(seed);
    let (m, n, k) = (6, 5, 2);
    let x = uniform(&mut r, m, n);
    let mut h = uniform(&mut r, k, n);
    for p in 0..k * n {
        if p % 3 == seed as usize % 3 {
            h.as_mut_slice()[p] = 0.0;
        }
    }
    let fac = Factorization {
        h,
        w: stochastic(&mut r, m, k),
        wt: stochastic(&mut r, k, m),
    };
    (x, fac, 0.2 + (seed % 7) as f64 * 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_t_matches_golden_section(seed in 0u64..10_000) {
        let (x, fac, lam) = point(seed);
        let entering = select_entering(&x, &fac, lam).unwrap();
        let leaving = select_leaving(&fac.h).unwrap();
        let mut h_minus = fac.h.clone();
        h_minus[leaving] = 0.0;
        let t = optimal_t(&x, &h_minus, &fac.w, &fac.wt, lam, entering);
        prop_assert!(!t.degenerate && t.t >= 0.0);
        let f = |t: f64| swap_objective(&x, &h_minus, &fac.w, &fac.wt, lam, entering, t);
        let oracle = golden_section(0.0, 20.0, 200, f);
        prop_assert!(f(t.t) <= f(oracle) + 1e-10 * (1.0 + f(oracle)));
        prop_assert!((t.t - oracle).abs() <= 1e-5 * (1.0 + oracle));
    }

    #[test]
    fn entering_is_the_off_support_gradient_minimum(seed in 0u64..10_000) {
        let (x, fac, lam) = point(seed);
        let (i, j) = select_entering(&x, &fac, lam).unwrap();
        prop_assert_eq!(fac.h[(i, j)], 0.0);
        let g = grad_h(&x, &fac, lam);
        let best = (0..fac.h.as_slice().len())
            .filter(|&p| fac.h.as_slice()[p] == 0.0)
            .map(|p| g.as_slice()[p])
            .fold(f64::INFINITY, f64::min);
        prop_assert_eq!(g[(i, j)], best);
    }

    #[test]
    fn refit_never_increases_along_its_alternation(seed in 0u64..2_000) {
        let (x, fac, lam) = point(seed);
        let leaving = select_leaving(&fac.h).unwrap();
        let entering = select_entering(&x, &fac, lam).unwrap();
        let out = swap_refit(&x, &fac, lam, Some(leaving), entering, &RefitOptions::default()).unwrap();
        prop_assert!(out.objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0])));
        prop_assert_eq!(out.fac.h[leaving], 0.0);
        prop_assert!(out.t >= 0.0);
        prop_assert!(out.fac.h.nnz(0.0) <= fac.h.nnz(0.0));
    }
}

#[test]
fn local_search_only_accepts_strict_improvements() {
    let inst = synth_instance::<f64>(15, 12, 3, 0.1, 0.2, 4).unwrap();
    let mut cfg = SaaConfig::new(3, 15, 1.0);
    cfg.max_iter = 50_000;
    let (fac, _) = solve(&inst.x, &zero_init(&inst.x, 3, 2), &cfg).unwrap();
    let start = naive_objective(&inst.x, &fac.h, &fac.w, &fac.wt, 1.0);
    let out = local_search(&inst.x, &fac, &cfg, 50).unwrap();
    assert!(out.objective <= start);
    let direct = naive_objective(&inst.x, &out.fac.h, &out.fac.w, &out.fac.wt, 1.0);
    assert!(rel_err(direct, out.objective) <= 1e-12);
    let accepted: Vec<_> = out.log.iter().filter(|s| s.accepted).collect();
    assert_eq!(accepted.len(), out.swaps_accepted);
    assert!(accepted.iter().all(|s| s.delta < 0.0));
    if out.swaps_accepted < 50 {
        // the search stops at the first rejection
        assert!(out.log.last().is_none_or(|s| !s.accepted));
    }
    out.fac.check_feasible(&inst.x, 15).unwrap();
}

#[test]
fn no_proposal_when_support_is_full() {
    let (x, mut fac, lam) = point(1);
    fac.h = fac.h.map(|v| v + 0.1);
    assert!(propose(&x, &fac, lam, 10).unwrap().is_none());
}

#[test]
fn under_budget_proposals_have_no_leaving_coordinate() {
    let (x, fac, lam) = point(2);
    let nnz = fac.h.nnz(0.0);
    let (leaving, _) = propose(&x, &fac, lam, nnz + 1).unwrap().unwrap();
    assert!(leaving.is_none());
}
