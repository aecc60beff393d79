use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use super::complexity::ComplexityResult;
use super::config::ExperimentConfig;
use super::trials::{thread_count, TrialReport};
use crate::error::{CatError, Result};

pub const RESULTS_HEADER: &str =
    "problem,class,k,eps,delta,n,m,trials,type1,type1_se,type2,type2_se,mean_sep,mean_tau,seed";

/// One `(eps, n*)` point of a sample-complexity curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub problem: String,
    pub class: String,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub n_star: Option<usize>,
    pub n_lo: Option<usize>,
    pub n_hi: Option<usize>,
    pub censored: bool,
}

impl From<&ComplexityResult> for CurvePoint {
    fn from(r: &ComplexityResult) -> Self {
        CurvePoint {
            problem: r.cell.problem.to_string(),
            class: r.cell.class.to_string(),
            k: r.evaluations.first().map_or(r.cell.k, |e| e.k),
            eps: r.cell.eps,
            delta: r.cell.delta,
            n_star: r.n_star,
            n_lo: r.n_lo,
            n_hi: r.n_hi,
            censored: r.censored,
        }
    }
}

/// Creates `dir` if needed and checks that a file can be written there.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    NamedTempFile::new_in(dir)?;
    Ok(())
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| CatError::Io(e.error))?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn results_csv(reports: &[TrialReport]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in reports {
        let c = &r.cell;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.problem,
            c.class,
            r.k,
            c.eps,
            c.delta,
            c.n,
            opt(c.m),
            r.trials,
            r.type1,
            r.type1_se,
            r.type2,
            r.type2_se,
            r.mean_sep,
            r.mean_tau,
            r.seed
        ));
    }
    s
}

fn curves_csv(curves: &[CurvePoint]) -> String {
    let mut s = String::from("problem,class,k,eps,delta,n_star,n_lo,n_hi,censored\n");
    for c in curves {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.problem,
            c.class,
            c.k,
            c.eps,
            c.delta,
            opt(c.n_star),
            opt(c.n_lo),
            opt(c.n_hi),
            c.censored
        ));
    }
    s
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    threads: usize,
    config: &'a ExperimentConfig,
    cells: Vec<CellMeta<'a>>,
}

#[derive(Serialize)]
struct CellMeta<'a> {
    cell: &'a super::config::Cell,
    null_counts: super::trials::VerdictCounts,
    alt_counts: super::trials::VerdictCounts,
    sep_se: f64,
    tau_se: f64,
    wall_secs: f64,
}

/// Writes `results.csv`, `meta.json` and `curves.csv` into `dir`, each by atomic rename.
///
/// `results.csv` depends only on the configuration and seed; timings go to `meta.json`.
pub fn emit_report(
    reports: &[TrialReport],
    curves: &[CurvePoint],
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    if reports.is_empty() {
        return Err(CatError::invalid("no cells to report"));
    }
    ensure_writable(dir)?;
    let meta = Meta {
        tool: "cattest",
        version: env!("CARGO_PKG_VERSION"),
        threads: thread_count(),
        config: cfg,
        cells: reports
            .iter()
            .map(|r| CellMeta {
                cell: &r.cell,
                null_counts: r.null_counts,
                alt_counts: r.alt_counts,
                sep_se: r.sep_se,
                tau_se: r.tau_se,
                wall_secs: r.wall_secs,
            })
            .collect(),
    };
    let meta_json = serde_json::to_string_pretty(&meta)
        .map_err(|e| CatError::Config(format!("metadata: {e}")))?;
    write_atomic(dir, "results.csv", &results_csv(reports))?;
    write_atomic(dir, "meta.json", &meta_json)?;
    write_atomic(dir, "curves.csv", &curves_csv(curves))?;
    Ok(())
}
