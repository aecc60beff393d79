//! Monte Carlo experiments: instance families, parallel trials, sample-complexity search and
//! report files.

mod complexity;
mod config;
mod instance;
mod report;
mod trials;

pub use complexity::{estimate_sample_complexity, ComplexityResult, SearchConfig};
pub use config::{Cell, ExperimentConfig, Family};
pub use instance::Instance;
pub use report::{emit_report, ensure_writable, CurvePoint, RESULTS_HEADER};
pub use trials::{run_cell, run_trials, thread_count, trial_seed, TrialReport, VerdictCounts};
