use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Cell, ExperimentConfig};
use super::instance::Instance;
use crate::dist::{hash_words, RngState};
use crate::engine::{
    run_gof_test, run_lfht_test, run_two_sample_test, Problem, TestOutcome, Verdict,
};
use crate::error::{CatError, Result};

/// Tallies of verdicts over trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub accept: usize,
    pub reject: usize,
    pub label_x: usize,
    pub label_y: usize,
}

impl VerdictCounts {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::AcceptH0 => self.accept += 1,
            Verdict::RejectH0 => self.reject += 1,
            Verdict::LabelX => self.label_x += 1,
            Verdict::LabelY => self.label_y += 1,
        }
    }
}

/// Aggregated errors of one cell.
///
/// `type1` is the rejection rate with both sides from the base distribution (for LFHT: the
/// rate of labelling a base-distributed Z as Y); `type2` is the acceptance rate under the
/// alternative (for LFHT: labelling an alternative-distributed Z as X). `mean_sep` and
/// `mean_tau` are exact values of the sets learned under the alternative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub cell: Cell,
    /// Alphabet size, grid cells or observed sequence length.
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub null_counts: VerdictCounts,
    pub alt_counts: VerdictCounts,
    pub type1: f64,
    pub type1_se: f64,
    pub type2: f64,
    pub type2_se: f64,
    pub mean_sep: f64,
    pub sep_se: f64,
    pub mean_tau: f64,
    pub tau_se: f64,
    pub wall_secs: f64,
}

impl TrialReport {
    /// Both error rates within `δ + 2·SE`.
    pub fn passes(&self) -> bool {
        let d = self.cell.delta;
        self.type1 <= d + 2.0 * self.type1_se && self.type2 <= d + 2.0 * self.type2_se
    }
}

struct TrialOut {
    null_verdict: Verdict,
    alt_verdict: Verdict,
    null_error: bool,
    alt_error: bool,
    sep: f64,
    tau: f64,
    k: usize,
}

fn cell_hash(cell: &Cell) -> u64 {
    hash_words(&[
        cell.problem as u64,
        cell.class as u64,
        cell.k as u64,
        cell.eps.to_bits(),
        cell.delta.to_bits(),
        cell.n as u64,
        cell.m.map_or(u64::MAX, |m| m as u64),
    ])
}

/// Seed of trial `trial` in `cell`, independent of scheduling.
pub fn trial_seed(base: u64, cell: &Cell, trial: usize) -> u64 {
    hash_words(&[base, cell_hash(cell), trial as u64])
}

/// Worker threads: `CAT_THREADS` if set to a positive integer, else all cores.
pub fn thread_count() -> usize {
    std::env::var("CAT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run_one(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<TrialOut> {
    let tc = cfg.test_config(cell);
    let root = RngState::new(seed);
    let inst = Instance::build(&cfg.family, cell, &tc, root.derive(0))?;
    let n = 2 * cell.n;
    let draw = |alt: bool, count: usize, tag: u64| inst.sample(alt, count, root.derive(tag));
    let (null, alt, alt_first): (TestOutcome, TestOutcome, bool) = match cell.problem {
        Problem::Gof => {
            let model = inst.null_model();
            let a = run_gof_test(&tc, &draw(false, n, 1)?, &model, root.derive(2))?;
            let b = run_gof_test(&tc, &draw(true, n, 3)?, &model, root.derive(4))?;
            (a, b, true)
        }
        Problem::Ts => {
            let a = run_two_sample_test(&tc, &draw(false, n, 1)?, &draw(false, n, 2)?, root.derive(5))?;
            let b = run_two_sample_test(&tc, &draw(false, n, 3)?, &draw(true, n, 4)?, root.derive(6))?;
            (a, b, false)
        }
        Problem::Lfht => {
            let m = 2 * cell.m.ok_or_else(|| CatError::invalid("LFHT cell without m"))?;
            let (x, y) = (draw(false, n, 1)?, draw(true, n, 2)?);
            let a = run_lfht_test(&tc, &x, &y, &draw(false, m, 3)?, root.derive(5))?;
            let b = run_lfht_test(&tc, &x, &y, &draw(true, m, 4)?, root.derive(6))?;
            (a, b, false)
        }
    };
    let (mut sep, tau) = inst.set_quality(&alt.set, alt_first)?;
    if cell.problem == Problem::Lfht {
        // The set is learned in a data-dependent orientation.
        sep = sep.abs();
    }
    let (null_error, alt_error) = match cell.problem {
        Problem::Lfht => (null.verdict == Verdict::LabelY, alt.verdict == Verdict::LabelX),
        _ => (null.verdict == Verdict::RejectH0, alt.verdict == Verdict::AcceptH0),
    };
    Ok(TrialOut {
        null_verdict: null.verdict,
        alt_verdict: alt.verdict,
        null_error,
        alt_error,
        sep,
        tau,
        k: inst.reported_k(),
    })
}

fn mean_se(v: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let c = count as f64;
    let mean = v.clone().sum::<f64>() / c;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = v.map(|x| (x - mean).powi(2)).sum::<f64>() / (c - 1.0);
    (mean, (var / c).sqrt())
}

fn rate_se(hits: usize, trials: usize) -> (f64, f64) {
    let r = hits as f64 / trials as f64;
    (r, (r * (1.0 - r) / trials as f64).sqrt())
}

/// Runs every trial of one cell in the current rayon pool; results are aggregated in trial
/// order.
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<TrialReport> {
    let start = Instant::now();
    let outs = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_one(cfg, cell, trial_seed(cfg.seed, cell, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut null_counts = VerdictCounts::default();
    let mut alt_counts = VerdictCounts::default();
    for o in &outs {
        null_counts.add(o.null_verdict);
        alt_counts.add(o.alt_verdict);
    }
    let trials = outs.len();
    let (type1, type1_se) = rate_se(outs.iter().filter(|o| o.null_error).count(), trials);
    let (type2, type2_se) = rate_se(outs.iter().filter(|o| o.alt_error).count(), trials);
    let (mean_sep, sep_se) = mean_se(outs.iter().map(|o| o.sep), trials);
    let (mean_tau, tau_se) = mean_se(outs.iter().map(|o| o.tau), trials);
    Ok(TrialReport {
        cell: *cell,
        k: outs[0].k,
        trials,
        seed: cfg.seed,
        null_counts,
        alt_counts,
        type1,
        type1_se,
        type2,
        type2_se,
        mean_sep,
        sep_se,
        mean_tau,
        tau_se,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

pub(crate) fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| CatError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every cell of the grid. Fails before any compute if the output path is unwritable.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output {
        super::report::ensure_writable(dir)?;
    }
    let cells = cfg.cells();
    with_pool(|| cells.iter().map(|c| run_cell(cfg, c)).collect::<Result<Vec<_>>>())?
}
