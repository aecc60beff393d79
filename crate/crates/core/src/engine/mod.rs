//! The classifier-accuracy statistic, its threshold, and end-to-end test pipelines.

mod config;
mod outcome;
mod pipeline;
mod stat;

pub use config::{Constants, DiscreteRoute, DistClass, Problem, SplitPolicy, TestConfig};
pub use outcome::{LearnedSet, TestOutcome, Verdict};
pub use pipeline::{
    resolve_route, run_gof_test, run_lfht_test, run_two_sample_test, NullModel, Sample,
};
pub use stat::{cat_statistic, cat_threshold, fraction_in};
