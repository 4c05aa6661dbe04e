mod common;

use common::*;
use proptest::prelude::*;
use saa_core::eval::{
    cluster_assign, cluster_metrics, prop1_constants, robustness_report, synth_instance,
    bound_constants,
};
use saa_core::DenseMatrix;

fn labels(k: usize, m: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (prop::collection::vec(0..k, m), prop::collection::vec(0..k, m))
}

proptest! {
    #[test]
    fn clustering_matches_hand_counts(((truth, est), k) in (1usize..=5).prop_flat_map(|k| (labels(k, 40), Just(k)))) {
        let lib = cluster_metrics(&truth, &est, k).unwrap();
        let (p, e) = purity_entropy_by_hand(&truth, &est, k);
        prop_assert!((lib.purity - p).abs() <= 1e-12);
        prop_assert!((lib.entropy - e).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&lib.purity));
        prop_assert!(lib.entropy >= 0.0 && lib.entropy <= 1.0 + 1e-12);
        let total: usize = lib.confusion.iter().flatten().sum();
        prop_assert_eq!(total, truth.len());
    }

    #[test]
    fn spread_bound_holds(seed in 0u64..100_000) {
        use rand::Rng;
        let mut r = rng(seed);
        let (k, n, m) = (3, 4, 6);
        let h0 = uniform(&mut r, k, n);
        let x0 = stochastic(&mut r, m, k).matmul(&h0);
        let h = uniform(&mut r, k, n).scale(r.random_range(0.1..3.0));
        let rep = robustness_report(&h0, &h, &x0, &DenseMatrix::zeros(m, n), k * n).unwrap();
        prop_assert!(rep.bounds.spread_holds);
        prop_assert!(rep.bounds.denoise_holds);
        prop_assert!((rep.weak - archetype_loss(&h0, &h)).abs() <= 1e-12 * (1.0 + rep.weak));
        prop_assert!((rep.spread_b - spread(&h0)).abs() <= 1e-12);
    }

    #[test]
    fn synth_is_deterministic_and_sparse(seed in 0u64..1_000, sigma in 0.0f64..0.5) {
        let a = synth_instance::<f64>(8, 10, 3, sigma, 0.2, seed).unwrap();
        let b = synth_instance::<f64>(8, 10, 3, sigma, 0.2, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.h0.nnz(0.0), 24);
        prop_assert!(a.x.min_value() >= 0.0);
        prop_assert!(a.w0.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
        prop_assert_eq!(a.labels().len(), 8);
    }
}

#[test]
fn noiseless_synth_has_x_equal_x0() {
    let inst = synth_instance::<f64>(10, 6, 2, 0.0, 0.2, 3).unwrap();
    assert_eq!(inst.x, inst.x0);
    assert_eq!(inst.z, DenseMatrix::zeros(10, 6));
}

#[test]
fn perfect_clustering_is_exact() {
    let truth = vec![0, 1, 2, 2, 1, 0, 0];
    let m = cluster_metrics(&truth, &truth, 3).unwrap();
    assert_eq!((m.purity, m.entropy), (1.0, 0.0));
    let one = cluster_metrics(&[0, 0, 0], &[0, 0, 0], 1).unwrap();
    assert_eq!((one.purity, one.entropy), (1.0, 0.0));
    assert!(cluster_metrics(&[0, 3], &[0, 1], 2).is_err());
}

#[test]
fn assignment_uses_nearest_archetype() {
    let x = DenseMatrix::from_rows(&[[0.0, 0.1], [0.9, 1.0], [0.5, 0.5]]).unwrap();
    let h = DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
    // the middle point is equidistant and goes to the lower index
    assert_eq!(cluster_assign(&x, &h).unwrap(), vec![0, 1, 0]);
}

#[test]
fn constants_grow_with_conditioning() {
    let a = bound_constants::<f64>(10, 3, 1.0, 1.0);
    let b = bound_constants::<f64>(10, 3, 5.0, 1.0);
    for i in [0, 1, 2, 3, 7, 8, 9] {
        assert!(b.c[i] > a.c[i], "c{}", i + 1);
    }
    assert_eq!(a.c[6], b.c[6]);
    let p = prop1_constants(10, 3, 2.0, 1.0).unwrap();
    assert!(p.c1 > 0.0 && p.c2 > 0.0 && p.c3 > 0.0);
}

#[test]
fn report_rejects_mismatched_shapes() {
    let h0 = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
    let h = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0]]).unwrap();
    assert!(robustness_report(&h0, &h, &h0, &DenseMatrix::zeros(1, 2), 2).is_err());
}
