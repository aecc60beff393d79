use std::fmt;

use super::TestConfig;
use crate::real::Real;
use crate::sep_discrete::DiscreteSepSet;
use crate::sep_gaussian::GaussianHalfspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    AcceptH0,
    RejectH0,
    LabelX,
    LabelY,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::AcceptH0 => "accept",
            Verdict::RejectH0 => "reject",
            Verdict::LabelX => "label-x",
            Verdict::LabelY => "label-y",
        })
    }
}

/// The separating set a pipeline learned.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnedSet<T: Real = f64> {
    Discrete(DiscreteSepSet),
    Halfspace(GaussianHalfspace<T>),
    /// The bucketed selector found no candidate.
    Nothing,
}

/// Result of one pipeline run.
///
/// For GoF and TS the verdict is `RejectH0` exactly when `|statistic| > threshold`. For LFHT
/// `statistic` is `T_S(Z, X)` and `threshold` is `|T_S(Z, Y)|`; the verdict is `LabelX` exactly
/// when `|statistic| ≤ threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome<T: Real = f64> {
    pub verdict: Verdict,
    pub statistic: f64,
    pub threshold: f64,
    /// Bound on τ(S) used for the threshold.
    pub tau_bar: f64,
    pub set: LearnedSet<T>,
    /// Construction tag (`half`, `greater`, `less`, `logk:j:gt|lt`, `halfspace`, `none`).
    pub tag: String,
    /// Per-class test size entering the threshold.
    pub n: usize,
    /// Test size of the Z sample (LFHT only).
    pub m: Option<usize>,
}

impl<T: Real> TestOutcome<T> {
    pub const CSV_HEADER: &'static str =
        "problem,class,eps,delta,n,m,verdict,statistic,threshold,sep_tag,seed";

    pub fn to_csv_row(&self, cfg: &TestConfig, seed: u64) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            cfg.problem,
            cfg.class,
            cfg.eps,
            cfg.delta,
            self.n,
            self.m.map(|m| m.to_string()).unwrap_or_default(),
            self.verdict,
            self.statistic,
            self.threshold,
            self.tag,
            seed
        )
    }
}
