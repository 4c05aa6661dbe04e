//! Robustness reports, error bounds, clustering metrics, the synthetic
//! generator and the small fixed examples.

mod clustering;
mod fixtures;
mod robustness;
mod synth;

pub use clustering::{cluster_assign, cluster_metrics, ClusterMetrics};
pub use fixtures::{appendix_b_fixture, example1_fixture, AppendixB, Example1};
pub use fixtures::appendix_b_fixture as appendixB_fixture;
pub use robustness::{
    prop1_constants, robustness_report, bound_constants, BoundChecks, Prop1Constants, RobustnessReport,
    BoundConstants,
};
pub use synth::{synth_instance, SynthInstance};
