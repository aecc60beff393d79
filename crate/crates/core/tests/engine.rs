use cat_core::binning::BumpDensity;
use cat_core::dist::{
    make_paninski_pair, make_sobolev_signal, make_uniform, random_signs, sample_gaussian_sequence,
    sample_iid_symbols, DiscretePmf, GaussianMean, RngState,
};
use cat_core::engine::{
    resolve_route, run_gof_test, run_lfht_test, run_two_sample_test, DiscreteRoute, DistClass,
    LearnedSet, NullModel, Problem, Sample, SplitPolicy, TestConfig, Verdict,
};
use cat_core::sep_discrete::DiscreteSepSet;
use cat_core::CatError;

fn draw(p: &DiscretePmf<f64>, n: usize, seed: u64, stream: u64) -> Sample<f64> {
    Sample::symbols(p.len(), sample_iid_symbols(p, n, RngState::with_stream(seed, stream))).unwrap()
}

fn paninski(k: usize, eps: f64, seed: u64) -> (DiscretePmf<f64>, DiscretePmf<f64>) {
    make_paninski_pair(k, eps, &random_signs(k / 2, RngState::new(seed))).unwrap()
}

fn rate(hits: usize, trials: usize) -> (f64, f64) {
    let r = hits as f64 / trials as f64;
    (r, (r * (1.0 - r) / trials as f64).sqrt())
}

#[test]
fn two_sample_null_is_calibrated() {
    let cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.2, 0.05);
    let p = make_uniform::<f64>(50).unwrap();
    let trials = 400;
    let mut rejects = 0;
    for t in 0..trials {
        let x = draw(&p, 2000, t, 1);
        let y = draw(&p, 2000, t, 2);
        let out = run_two_sample_test(&cfg, &x, &y, RngState::new(t)).unwrap();
        rejects += (out.verdict == Verdict::RejectH0) as usize;
    }
    let (r, se) = rate(rejects, trials as usize);
    assert!(r <= 0.05 + 3.0 * se.max(0.01), "type-I {r}");
}

#[test]
fn two_sample_power_on_paninski() {
    // Bounded-class budget √(k ln(1/δ))/ε² + ln(1/δ)/ε² at k=100, ε=0.2, δ=0.05, times 5.
    let (k, eps, delta) = (100usize, 0.2, 0.05);
    let l = (1.0f64 / delta).ln();
    let n = (5.0 * ((k as f64 * l).sqrt() / (eps * eps) + l / (eps * eps))).ceil() as usize;
    let cfg = TestConfig::new(Problem::Ts, DistClass::Db, eps, delta);
    let trials = 300;
    let mut rejects = 0;
    for t in 0..trials {
        let (p, q) = paninski(k, eps, 1000 + t);
        let out = run_two_sample_test(&cfg, &draw(&p, 2 * n, t, 1), &draw(&q, 2 * n, t, 2), RngState::new(t)).unwrap();
        rejects += (out.verdict == Verdict::RejectH0) as usize;
    }
    assert!(rejects as f64 / trials as f64 >= 0.95, "power {rejects}/{trials}");
}

#[test]
fn gof_null_and_power() {
    let (k, eps, delta) = (200usize, 0.25, 0.1);
    let cfg = TestConfig::new(Problem::Gof, DistClass::Db, eps, delta);
    let p0 = make_uniform::<f64>(k).unwrap();
    let null = NullModel::Discrete(p0.clone());
    let (trials, n) = (300u64, 3000usize);
    let (mut type1, mut type2) = (0, 0);
    for t in 0..trials {
        let (_, q) = paninski(k, eps, 77 + t);
        let a = run_gof_test(&cfg, &draw(&p0, 2 * n, t, 1), &null, RngState::new(t)).unwrap();
        let b = run_gof_test(&cfg, &draw(&q, 2 * n, t, 2), &null, RngState::new(t)).unwrap();
        type1 += (a.verdict == Verdict::RejectH0) as usize;
        type2 += (b.verdict == Verdict::AcceptH0) as usize;
    }
    assert!(type1 as f64 / trials as f64 <= 0.1 + 0.05, "type-I {type1}");
    assert!(type2 as f64 / trials as f64 <= 0.1, "type-II {type2}");
}

#[test]
fn gof_reference_side_is_exact() {
    // Expectations n·p0_i are never integers here, so no coin is ever consulted.
    let k = 40;
    let w: Vec<f64> = (0..k).map(|i| 1.0 + (i as f64).sqrt() * 0.37).collect();
    let p0 = DiscretePmf::from_weights(w).unwrap();
    let cfg = TestConfig::new(Problem::Gof, DistClass::D, 0.2, 0.05);
    let x = draw(&p0, 1001, 5, 0);
    let a = run_gof_test(&cfg, &x, &NullModel::Discrete(p0.clone()), RngState::new(1)).unwrap();
    let b = run_gof_test(&cfg, &x, &NullModel::Discrete(p0.clone()), RngState::new(2)).unwrap();
    assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
    let LearnedSet::Discrete(s) = &a.set else { panic!("expected a discrete set") };
    let Sample::Symbols { data, .. } = &x else { unreachable!() };
    let te = &data[data.len() / 2..];
    let frac = te.iter().filter(|&&i| s.contains(i)).count() as f64 / te.len() as f64;
    assert!((a.statistic - (frac - p0.mass(s.members()))).abs() < 1e-15);
}

#[test]
fn outcome_is_deterministic() {
    let (p, q) = paninski(64, 0.3, 3);
    for class in [DistClass::Db, DistClass::D] {
        for route in [DiscreteRoute::Half, DiscreteRoute::BetterOfTwo, DiscreteRoute::BestOfLogK] {
            let mut cfg = TestConfig::new(Problem::Ts, class, 0.3, 0.1);
            cfg.route = route;
            let x = draw(&p, 600, 9, 1);
            let y = draw(&q, 600, 9, 2);
            let a = run_two_sample_test(&cfg, &x, &y, RngState::new(4)).unwrap();
            let b = run_two_sample_test(&cfg, &x, &y, RngState::new(4)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
        }
    }
}

#[test]
fn verdict_matches_statistic_and_threshold() {
    let (p, q) = paninski(100, 0.3, 8);
    let cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.3, 0.05);
    for t in 0..50 {
        let out = run_two_sample_test(&cfg, &draw(&p, 400, t, 1), &draw(&q, 400, t, 2), RngState::new(t)).unwrap();
        assert_eq!(out.verdict == Verdict::RejectH0, out.statistic.abs() > out.threshold);
    }
}

#[test]
fn lfht_label_swap_is_exact() {
    let (p, q) = paninski(32, 0.3, 11);
    for class in [DistClass::Db, DistClass::D] {
        let cfg = TestConfig::new(Problem::Lfht, class, 0.3, 0.1);
        for t in 0..200 {
            // Small samples make |u| = |v| ties common.
            let x = draw(&p, 20, t, 1);
            let y = draw(&q, 20, t, 2);
            let z = draw(if t % 2 == 0 { &p } else { &q }, 10, t, 3);
            let a = run_lfht_test(&cfg, &x, &y, &z, RngState::new(t)).unwrap();
            let b = run_lfht_test(&cfg, &y, &x, &z, RngState::new(t)).unwrap();
            let flipped = match b.verdict {
                Verdict::LabelX => Verdict::LabelY,
                _ => Verdict::LabelX,
            };
            assert_eq!(a.verdict, flipped, "trial {t}");
            assert_eq!(a.statistic.abs(), b.threshold);
        }
    }
}

#[test]
fn lfht_labels_correctly() {
    let (k, eps) = (100usize, 0.3);
    let cfg = TestConfig::new(Problem::Lfht, DistClass::Db, eps, 0.1);
    let trials = 200;
    let mut errors = 0;
    for t in 0..trials {
        let (p, q) = paninski(k, eps, 500 + t);
        let from_x = t % 2 == 0;
        let z = draw(if from_x { &p } else { &q }, 400, t, 3);
        let out = run_lfht_test(&cfg, &draw(&p, 3000, t, 1), &draw(&q, 3000, t, 2), &z, RngState::new(t)).unwrap();
        let want = if from_x { Verdict::LabelX } else { Verdict::LabelY };
        errors += (out.verdict != want) as usize;
    }
    assert!(errors as f64 / trials as f64 <= 0.1, "errors {errors}/{trials}");
}

#[test]
fn lfht_equal_distributions_do_not_crash() {
    let p = make_uniform::<f64>(20).unwrap();
    let cfg = TestConfig::new(Problem::Lfht, DistClass::D, 0.2, 0.1);
    let out = run_lfht_test(&cfg, &draw(&p, 100, 1, 1), &draw(&p, 100, 1, 2), &draw(&p, 100, 1, 3), RngState::new(0)).unwrap();
    assert!(matches!(out.verdict, Verdict::LabelX | Verdict::LabelY));
    assert_eq!(out.m, Some(50));
}

#[test]
fn none_found_accepts() {
    let p = make_uniform::<f64>(2000).unwrap();
    let mut cfg = TestConfig::new(Problem::Gof, DistClass::D, 0.25, 0.1);
    cfg.route = DiscreteRoute::BestOfLogK;
    cfg.constants.c1 = 1e6;
    let out = run_gof_test(&cfg, &draw(&p, 400, 2, 0), &NullModel::Discrete(p.clone()), RngState::new(0)).unwrap();
    assert_eq!(out.verdict, Verdict::AcceptH0);
    assert_eq!(out.tag, "none");
    assert_eq!(out.set, LearnedSet::Nothing);
    assert!(out.statistic.abs() <= out.threshold);
}

#[test]
fn best_of_logk_route_records_bucket() {
    let k = 2000;
    let (p, q) = paninski(k, 0.45, 4);
    let mut cfg = TestConfig::new(Problem::Gof, DistClass::D, 0.45, 0.1);
    cfg.route = DiscreteRoute::BestOfLogK;
    cfg.constants.c1 = 1.0;
    let out = run_gof_test(&cfg, &draw(&q, 1600, 3, 0), &NullModel::Discrete(p), RngState::new(0)).unwrap();
    assert!(out.tag.starts_with("logk:"), "{}", out.tag);
    assert!(out.tau_bar <= 0.25);
}

#[test]
fn route_resolution() {
    let mut cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.25, 0.1);
    // ln(10)/0.25⁴ ≈ 589.
    assert_eq!(resolve_route(&cfg, 100, 1000, None), DiscreteRoute::Half);
    assert_eq!(resolve_route(&cfg, 1000, 100, None), DiscreteRoute::BetterOfTwo);
    cfg.class = DistClass::D;
    assert_eq!(resolve_route(&cfg, 10_000, 100, None), DiscreteRoute::Half);
    cfg.problem = Problem::Gof;
    assert_eq!(resolve_route(&cfg, 10_000, 100, None), DiscreteRoute::BestOfLogK);
    cfg.problem = Problem::Lfht;
    assert_eq!(resolve_route(&cfg, 10_000, 100, Some(50_000)), DiscreteRoute::BestOfLogK);
    assert_eq!(resolve_route(&cfg, 10_000, 100, Some(80)), DiscreteRoute::Half);
    cfg.route = DiscreteRoute::BetterOfTwo;
    assert_eq!(resolve_route(&cfg, 10, 100, None), DiscreteRoute::BetterOfTwo);
}

#[test]
fn better_of_two_tau_bar_tracks_set_size() {
    let (p, q) = paninski(4000, 0.3, 2);
    let cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.3, 0.1);
    let out = run_two_sample_test(&cfg, &draw(&p, 800, 1, 1), &draw(&q, 800, 1, 2), RngState::new(0)).unwrap();
    let LearnedSet::Discrete(s) = &out.set else { panic!() };
    assert!(matches!(out.tag.as_str(), "greater" | "less"));
    assert!((out.tau_bar - (2.0 * s.len() as f64 / 4000.0).min(0.25)).abs() < 1e-15);
    assert!(s.len() <= 200);
}

#[test]
fn gaussian_pipelines() {
    let (s, eps) = (1.0, 0.2);
    let signs = random_signs(2, RngState::new(1));
    let theta = make_sobolev_signal(s, 1.0, eps, &signs, 4.1, 0.4).unwrap();
    let zero = GaussianMean::zero(1, s, 1.0).unwrap();
    let cfg = TestConfig::new(Problem::Ts, DistClass::Gauss, eps, 0.1);
    let len = 20;
    let rows = |th: &GaussianMean<f64>, n, seed, stream| {
        Sample::Rows(sample_gaussian_sequence(th, len, n, RngState::with_stream(seed, stream)).unwrap())
    };
    let (mut rej_alt, mut rej_null) = (0, 0);
    let trials = 100;
    for t in 0..trials {
        let a = run_two_sample_test(&cfg, &rows(&theta, 4000, t, 1), &rows(&zero, 4000, t, 2), RngState::new(t)).unwrap();
        let b = run_two_sample_test(&cfg, &rows(&zero, 4000, t, 3), &rows(&zero, 4000, t, 4), RngState::new(t)).unwrap();
        rej_alt += (a.verdict == Verdict::RejectH0) as usize;
        rej_null += (b.verdict == Verdict::RejectH0) as usize;
        assert_eq!(a.tag, "halfspace");
    }
    assert!(rej_alt >= 90, "power {rej_alt}");
    assert!(rej_null <= 15, "type-I {rej_null}");

    let gof = TestConfig::new(Problem::Gof, DistClass::Gauss, eps, 0.1);
    let out = run_gof_test(&gof, &rows(&theta, 4000, 0, 5), &NullModel::Gaussian(zero.clone()), RngState::new(0)).unwrap();
    assert_eq!(out.verdict, Verdict::RejectH0);

    let short = Sample::Rows(sample_gaussian_sequence(&zero, 5, 10, RngState::new(0)).unwrap());
    let err = run_two_sample_test(&cfg, &short, &short, RngState::new(0)).unwrap_err();
    assert!(matches!(err, CatError::InvalidArgument(_)));
}

#[test]
fn smooth_density_pipelines() {
    let eps = 0.2;
    let alt = BumpDensity::new(eps, random_signs(8, RngState::new(3))).unwrap();
    let flat = BumpDensity::new(0.0, vec![1]).unwrap();
    let mut cfg = TestConfig::new(Problem::Gof, DistClass::Holder, eps, 0.1);
    // 16 cells, two per bump.
    cfg.constants.res_const = 3.2;
    let x = Sample::Rows(alt.sample(4000, RngState::new(1)));
    let out = run_gof_test(&cfg, &x, &NullModel::UniformCube, RngState::new(0)).unwrap();
    assert_eq!(out.verdict, Verdict::RejectH0);
    let u = Sample::Rows(flat.sample(4000, RngState::new(2)));
    let out = run_gof_test(&cfg, &u, &NullModel::UniformCube, RngState::new(0)).unwrap();
    assert_eq!(out.verdict, Verdict::AcceptH0);
    cfg.problem = Problem::Ts;
    let y = Sample::Rows(flat.sample(4000, RngState::new(5)));
    let out = run_two_sample_test(&cfg, &x, &y, RngState::new(0)).unwrap();
    assert_eq!(out.verdict, Verdict::RejectH0);
}

#[test]
fn input_errors() {
    let p = make_uniform::<f64>(10).unwrap();
    let cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.2, 0.05);
    let one = Sample::symbols(10, vec![3]).unwrap();
    let ok = draw(&p, 20, 0, 0);
    assert!(matches!(run_two_sample_test(&cfg, &one, &ok, RngState::new(0)), Err(CatError::InvalidArgument(_))));
    assert!(Sample::<f64>::symbols(10, vec![10]).is_err());
    let other = draw(&make_uniform::<f64>(12).unwrap(), 20, 0, 0);
    assert!(run_two_sample_test(&cfg, &ok, &other, RngState::new(0)).is_err());
    let wrong = TestConfig::new(Problem::Gof, DistClass::Db, 0.2, 0.05);
    assert!(run_two_sample_test(&wrong, &ok, &ok, RngState::new(0)).is_err());
    let bad_null = NullModel::Discrete(make_uniform::<f64>(11).unwrap());
    assert!(run_gof_test(&wrong, &ok, &bad_null, RngState::new(0)).is_err());
}

#[test]
fn interleaved_split_uses_alternate_positions() {
    let k = 4;
    let x = Sample::<f64>::symbols(k, vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
    let y = Sample::<f64>::symbols(k, vec![2, 1, 2, 1, 2, 1, 2, 1]).unwrap();
    let mut cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.5, 0.1);
    cfg.split = SplitPolicy::Interleaved;
    cfg.route = DiscreteRoute::Half;
    // Training halves are all 0s versus all 2s; test halves are all 1s on both sides.
    let out = run_two_sample_test(&cfg, &x, &y, RngState::new(0)).unwrap();
    assert_eq!(out.statistic, 0.0);
    let LearnedSet::Discrete(s) = out.set else { panic!() };
    assert!(s.contains(0) && !s.contains(2));
    let _ = DiscreteSepSet::new(k, vec![0], s.tag()).unwrap();
}

#[test]
fn csv_row_layout() {
    let p = make_uniform::<f64>(10).unwrap();
    let cfg = TestConfig::new(Problem::Ts, DistClass::Db, 0.2, 0.05);
    let out = run_two_sample_test(&cfg, &draw(&p, 40, 0, 1), &draw(&p, 40, 0, 2), RngState::new(0)).unwrap();
    let row = out.to_csv_row(&cfg, 42);
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 11);
    assert_eq!(&fields[..2], &["ts", "db"]);
    assert_eq!(fields[4], "20");
    assert_eq!(fields[5], "");
    assert_eq!(fields[10], "42");
    assert_eq!(cat_core::engine::TestOutcome::<f64>::CSV_HEADER.split(',').count(), 11);
}
