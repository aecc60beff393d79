use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig};
use super::trials::{run_cell, with_pool, TrialReport};
use crate::error::{CatError, Result};

fn default_ratio() -> f64 {
    1.3
}

/// Search range for the empirical sample complexity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Stop once `n_hi / n_lo` is at most this.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_max < self.n_min || !(self.ratio > 1.0) {
            return Err(CatError::invalid("search needs 1 ≤ n_min ≤ n_max and ratio > 1"));
        }
        Ok(())
    }
}

/// Outcome of a search: `n_star` is set only when a failing and a passing size bracket it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityResult {
    pub cell: Cell,
    pub n_star: Option<usize>,
    /// Largest failing and smallest passing size evaluated.
    pub n_lo: Option<usize>,
    pub n_hi: Option<usize>,
    /// True when no failing or no passing size was found in range.
    pub censored: bool,
    pub evaluations: Vec<TrialReport>,
}

/// Smallest per-half `n` whose type-I and type-II rates are both within `δ + 2·SE`, found by
/// doubling from `n_min` and then geometric bisection. Power is assumed monotone in `n`.
pub fn estimate_sample_complexity(cfg: &ExperimentConfig, cell: &Cell) -> Result<ComplexityResult> {
    let search = cfg
        .search
        .ok_or_else(|| CatError::invalid("configuration has no [search] section"))?;
    search.validate()?;
    with_pool(|| {
        let mut evaluations = Vec::new();
        let mut eval = |n: usize| -> Result<bool> {
            let r = run_cell(cfg, &Cell { n, ..*cell })?;
            let pass = r.passes();
            evaluations.push(r);
            Ok(pass)
        };
        let (mut lo, mut hi) = (None, None);
        let mut n = search.n_min;
        loop {
            if eval(n)? {
                hi = Some(n);
                break;
            }
            lo = Some(n);
            if n >= search.n_max {
                break;
            }
            n = (2 * n).min(search.n_max);
        }
        if let (Some(mut l), Some(mut h)) = (lo, hi) {
            while h as f64 / l as f64 > search.ratio {
                let mid = ((l as f64) * (h as f64)).sqrt().round() as usize;
                if mid <= l || mid >= h {
                    break;
                }
                if eval(mid)? {
                    h = mid;
                } else {
                    l = mid;
                }
            }
            lo = Some(l);
            hi = Some(h);
        }
        let closed = lo.is_some() && hi.is_some();
        Ok(ComplexityResult {
            cell: *cell,
            n_star: if closed { hi } else { None },
            n_lo: lo,
            n_hi: hi,
            censored: !closed,
            evaluations,
        })
    })?
}
