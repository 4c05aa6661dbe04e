mod common;

use common::*;
use saa_core::eval::synth_instance;
use saa_core::mip::MipConfig;
use saa_core::io::{read_json, read_matrix, write_json, write_matrix};
use saa_core::pipeline::{fit, run_sweep, sweep_means, FitOptions, InitKind, SweepSpec};
use saa_core::{LambdaSpec, SaaConfig};

fn small_config(seed: u64) -> (SaaConfig, FitOptions) {
    let mut cfg = SaaConfig::new(2, 10, 1.0);
    cfg.lambda = LambdaSpec::log_schedule(10.0, 1.0, 3).unwrap();
    cfg.max_iter = 2_000;
    cfg.seed = seed;
    let opts = FitOptions {
        max_swaps: 20,
        mip: MipConfig { max_rounds: 4, ..MipConfig::default() },
        ..FitOptions::default()
    };
    (cfg, opts)
}

#[test]
fn fit_is_deterministic_and_feasible() {
    let inst = synth_instance::<f64>(12, 8, 2, 0.1, 0.2, 7).unwrap();
    let (cfg, opts) = small_config(3);
    let a = fit(&inst.x, &cfg, &opts).unwrap();
    let b = fit(&inst.x, &cfg, &opts).unwrap();
    assert_eq!(a.fac, b.fac);
    assert_eq!(a.swaps, b.swaps);
    a.fac.check_feasible(&inst.x, 10).unwrap();
    let direct = naive_objective(&inst.x, &a.fac.h, &a.fac.w, &a.fac.wt, 1.0);
    assert!(rel_err(direct, a.objective.total) <= 1e-12);
    assert!(a.objective.total <= a.objective_before_search);
    assert_eq!(a.traces.len(), 3);
    assert!(a.cuts.is_some());
}

#[test]
fn zero_init_skips_the_schedule() {
    let inst = synth_instance::<f64>(12, 8, 2, 0.1, 0.2, 8).unwrap();
    let (cfg, mut opts) = small_config(1);
    opts.init = InitKind::Zero;
    opts.local_search = false;
    let out = fit(&inst.x, &cfg, &opts).unwrap();
    assert_eq!(out.traces.len(), 1);
    assert_eq!(out.traces[0].0, 1.0);
    assert!(out.cuts.is_none());
    assert_eq!(out.objective.total, out.objective_before_search);
}

#[test]
fn sweep_rows_follow_grid_order() {
    let (cfg, mut opts) = small_config(0);
    opts.local_search = false;
    let spec = SweepSpec {
        m: 10,
        n: 6,
        k: 2,
        zero_frac: 0.2,
        sigmas: vec![0.0, 0.2],
        ell_fracs: vec![0.5],
        seeds: vec![0, 1],
        cfg,
        fit: opts,
    };
    let rows = run_sweep(&spec).unwrap();
    let order: Vec<_> = rows.iter().map(|r| (r.sigma_z, r.seed)).collect();
    assert_eq!(order, vec![(0.0, 0), (0.0, 1), (0.2, 0), (0.2, 1)]);
    assert!(rows.iter().all(|r| r.ell == 6 && r.weak >= 0.0 && r.strong >= 0.0));
    let means = sweep_means(&rows);
    assert_eq!(means.len(), 2);
    assert!((means[0].weak - (rows[0].weak + rows[1].weak) / 2.0).abs() <= 1e-12);
    assert_eq!(run_sweep(&spec).unwrap(), rows);
}

#[test]
fn matrices_and_configs_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let inst = synth_instance::<f64>(5, 4, 2, 0.3, 0.2, 2).unwrap();
    let path = dir.path().join("x.csv");
    write_matrix(&path, &inst.x).unwrap();
    assert_eq!(read_matrix::<f64>(&path).unwrap(), inst.x);
    let (cfg, opts) = small_config(9);
    let cpath = dir.path().join("cfg.json");
    write_json(&cpath, &(cfg.clone(), opts.clone())).unwrap();
    let back: (SaaConfig, FitOptions) = read_json(&cpath).unwrap();
    assert_eq!(back, (cfg, opts));
    assert!(read_matrix::<f64>(&dir.path().join("missing.csv")).is_err());
}
