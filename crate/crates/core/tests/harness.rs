use std::fs;

use cat_core::harness::{
    emit_report, estimate_sample_complexity, run_cell, run_trials, CurvePoint, ExperimentConfig,
    SearchConfig, RESULTS_HEADER,
};
use cat_core::CatError;

fn base_config(extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
problems = ["gof", "ts"]
classes = ["db"]
k = [64]
eps = [0.3]
delta = [0.1]
n = [200, 1500]
trials = 60
seed = 11
{extra}
[family]
kind = "paninski"
"#
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg = base_config("");
    let a = run_trials(&cfg).unwrap();
    let b = run_trials(&cfg).unwrap();
    emit_report(&a, &[], &cfg, dir_a.path()).unwrap();
    emit_report(&b, &[], &cfg, dir_b.path()).unwrap();
    let ra = fs::read(dir_a.path().join("results.csv")).unwrap();
    let rb = fs::read(dir_b.path().join("results.csv")).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), RESULTS_HEADER);
    assert_eq!(lines.count(), 4);
    assert!(dir_a.path().join("meta.json").exists());
    assert!(dir_a.path().join("curves.csv").exists());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir_a.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["constants"]["c0"], 0.1);
    assert_eq!(meta["config"]["threshold_const"], 8.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = base_config("");
    let cell = cfg.cells()[1];
    let one = pool(1, || run_cell(&cfg, &cell).unwrap());
    let four = pool(4, || run_cell(&cfg, &cell).unwrap());
    assert_eq!(one.type1, four.type1);
    assert_eq!(one.type2, four.type2);
    assert_eq!(one.mean_sep.to_bits(), four.mean_sep.to_bits());
    assert_eq!(one.null_counts, four.null_counts);
}

#[test]
fn single_trial_is_reproducible() {
    let mut cfg = base_config("");
    cfg.trials = 1;
    let a = run_trials(&cfg).unwrap();
    let b = run_trials(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.type1, y.type1);
        assert_eq!(x.mean_tau.to_bits(), y.mean_tau.to_bits());
    }
}

#[test]
fn rates_and_errors_are_sane() {
    let reports = run_trials(&base_config("")).unwrap();
    for r in &reports {
        assert!((0.0..=1.0).contains(&r.type1) && (0.0..=1.0).contains(&r.type2));
        let se = (r.type1 * (1.0 - r.type1) / r.trials as f64).sqrt();
        assert!((r.type1_se - se).abs() < 1e-15);
        assert!(r.mean_tau <= 0.25 + 1e-12);
    }
    // Largest n in each problem has power.
    assert!(reports[1].type2 <= 0.1 && reports[3].type2 <= 0.1);
}

#[test]
fn doubling_trials_halves_variance() {
    let mut cfg = base_config("");
    cfg.trials = 400;
    let cell = cfg.cells()[0];
    let a = run_cell(&cfg, &cell).unwrap();
    cfg.trials = 1600;
    let b = run_cell(&cfg, &cell).unwrap();
    let ratio = a.sep_se / b.sep_se;
    assert!((ratio - 2.0).abs() < 0.3, "SE ratio {ratio}");
}

#[test]
fn unwritable_output_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let mut cfg = base_config("");
    cfg.trials = 1_000_000_000;
    cfg.output = Some(blocker.join("sub"));
    let err = run_trials(&cfg).unwrap_err();
    assert!(matches!(err, CatError::Io(_)), "{err:?}");
}

#[test]
fn empty_report_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config("");
    assert!(matches!(emit_report(&[], &[], &cfg, dir.path()), Err(CatError::InvalidArgument(_))));
}

#[test]
fn complexity_search_brackets_and_censors() {
    let mut cfg = base_config("");
    cfg.problems = vec![cat_core::engine::Problem::Gof];
    cfg.trials = 100;
    cfg.search = Some(SearchConfig { n_min: 16, n_max: 8192, ratio: 1.3 });
    let cell = cfg.cells()[0];
    let r = estimate_sample_complexity(&cfg, &cell).unwrap();
    assert!(!r.censored);
    let (lo, hi) = (r.n_lo.unwrap(), r.n_hi.unwrap());
    assert!(hi as f64 / lo as f64 <= 1.3 && lo < hi);
    assert_eq!(r.n_star, Some(hi));
    let point = CurvePoint::from(&r);
    assert_eq!(point.n_star, Some(hi));

    cfg.search = Some(SearchConfig { n_min: 4, n_max: 8, ratio: 1.3 });
    let r = estimate_sample_complexity(&cfg, &cell).unwrap();
    assert!(r.censored && r.n_star.is_none());
}

#[test]
fn extreme_separation_needs_few_samples() {
    // With k = 2 and eps = 1/2 the alternative is a point mass.
    let mut cfg = base_config("");
    cfg.problems = vec![cat_core::engine::Problem::Ts];
    cfg.k = vec![2];
    cfg.eps = vec![0.5];
    cfg.trials = 200;
    cfg.search = Some(SearchConfig { n_min: 2, n_max: 4096, ratio: 1.3 });
    let cell = cfg.cells()[0];
    let r = estimate_sample_complexity(&cfg, &cell).unwrap();
    let n = r.n_star.expect("bracket closes");
    let l = (1.0f64 / 0.1).ln();
    assert!((n as f64) < 40.0 * l, "n* = {n}");
}

#[test]
fn gaussian_and_smooth_families_run() {
    let g = ExperimentConfig::from_toml(
        "problems=[\"gof\",\"lfht\"]\nclasses=[\"gauss\"]\neps=[0.2]\ndelta=[0.1]\nn=[500]\nm=[200]\ntrials=20\n[family]\nkind=\"sobolev\"\n",
    )
    .unwrap();
    let r = run_trials(&g).unwrap();
    assert_eq!(r.len(), 2);
    assert_eq!(r[0].k, 20);
    let h = ExperimentConfig::from_toml(
        "problems=[\"ts\"]\nclasses=[\"holder\"]\neps=[0.2]\ndelta=[0.1]\nn=[2000]\ntrials=20\n[family]\nkind=\"bumps\"\nbumps=5\n",
    )
    .unwrap();
    let r = run_trials(&h).unwrap();
    assert_eq!(r[0].k, 10);
    assert!(r[0].mean_sep > 0.0);
}
