use super::config::{DiscreteRoute, DistClass, Problem, SplitPolicy, TestConfig};
use super::outcome::{LearnedSet, TestOutcome, Verdict};
use super::stat::{cat_threshold, fraction_in};
use crate::binning::{choose_resolution, grid_symbols};
use crate::dist::{hash_words, make_uniform, CountVector, DiscretePmf, GaussianMean, RngState, SampleMatrix};
use crate::error::{CatError, Result};
use crate::real::Real;
use crate::sep_discrete::{
    bucketize, empirical_pmf, select_best_of_logk, select_better_of_two, sep_set_directional,
    sep_set_half, BestOfLogK, DiscreteSepSet, Direction, YSide,
};
use crate::sep_gaussian::{gaussian_sep_set, halfspace_mass, truncation_level};

const STREAM_COINS: u64 = 1;

/// Raw observations. Discrete data are symbols in `0..k`; continuous data are matrix rows.
#[derive(Clone, Debug, PartialEq)]
pub enum Sample<T: Real = f64> {
    Symbols { k: usize, data: Vec<usize> },
    Rows(SampleMatrix<T>),
}

impl<T: Real> Sample<T> {
    /// Validated symbol sample.
    pub fn symbols(k: usize, data: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(CatError::invalid("alphabet size must be positive"));
        }
        if let Some(&bad) = data.iter().find(|&&s| s >= k) {
            return Err(CatError::invalid(format!("symbol {bad} outside 0..{k}")));
        }
        Ok(Sample::Symbols { k, data })
    }

    pub fn len(&self) -> usize {
        match self {
            Sample::Symbols { data, .. } => data.len(),
            Sample::Rows(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fingerprint(&self) -> u64 {
        let words: Vec<u64> = match self {
            Sample::Symbols { k, data } => std::iter::once(*k as u64)
                .chain(data.iter().map(|&s| s as u64))
                .collect(),
            Sample::Rows(m) => [m.rows() as u64, m.cols() as u64]
                .into_iter()
                .chain(m.data().iter().map(|v| v.as_f64().to_bits()))
                .collect(),
        };
        hash_words(&words)
    }
}

/// Known null distribution for goodness-of-fit.
#[derive(Clone, Debug, PartialEq)]
pub enum NullModel<T: Real = f64> {
    /// A pmf on `0..k`; for binned data, a pmf on the grid cells.
    Discrete(DiscretePmf<T>),
    Gaussian(GaussianMean<T>),
    /// Uniform density on `[0,1]^d`.
    UniformCube,
}

fn split_vec<V: Clone>(data: &[V], policy: SplitPolicy) -> Result<(Vec<V>, Vec<V>)> {
    if data.len() < 2 {
        return Err(CatError::invalid("each sample needs at least two observations"));
    }
    Ok(match policy {
        SplitPolicy::Contiguous => {
            let h = data.len() / 2;
            (data[..h].to_vec(), data[h..].to_vec())
        }
        SplitPolicy::Interleaved => (
            data.iter().step_by(2).cloned().collect(),
            data.iter().skip(1).step_by(2).cloned().collect(),
        ),
    })
}

fn split_rows<T: Real>(m: &SampleMatrix<T>, policy: SplitPolicy) -> Result<(SampleMatrix<T>, SampleMatrix<T>)> {
    let idx: Vec<usize> = (0..m.rows()).collect();
    let (a, b) = split_vec(&idx, policy)?;
    let take = |rows: &[usize]| {
        let data = rows.iter().flat_map(|&r| m.row(r).iter().copied()).collect();
        SampleMatrix::new(rows.len(), m.cols(), data)
    };
    Ok((take(&a)?, take(&b)?))
}

fn counts(data: &[usize], k: usize) -> Result<CountVector> {
    CountVector::from_symbols(data, k)
}

/// Discrete reference side before counting.
#[derive(Clone, Copy)]
enum Ref<'a> {
    Sample(&'a [usize]),
    Known(&'a DiscretePmf<f64>),
}

impl<'a> Ref<'a> {
    fn halves(self) -> (Ref<'a>, Ref<'a>) {
        match self {
            Ref::Sample(s) => {
                let h = s.len() / 2;
                (Ref::Sample(&s[..h]), Ref::Sample(&s[h..]))
            }
            Ref::Known(_) => (self, self),
        }
    }
}

enum RefCounts<'a> {
    Counts(CountVector),
    Known(&'a DiscretePmf<f64>),
}

impl<'a> RefCounts<'a> {
    fn of(r: Ref<'a>, k: usize) -> Result<Self> {
        Ok(match r {
            Ref::Sample(s) => RefCounts::Counts(counts(s, k)?),
            Ref::Known(p) => RefCounts::Known(p),
        })
    }

    fn side(&self) -> YSide<'_> {
        match self {
            RefCounts::Counts(c) => YSide::Counts(c),
            RefCounts::Known(p) => YSide::Known(p),
        }
    }
}

struct Learned {
    set: Option<DiscreteSepSet>,
    tau: f64,
}

/// Set construction a discrete pipeline will use.
///
/// `n_train` is the per-class training size and `m_train` the training size of the Z sample
/// (LFHT only). An explicit route in `cfg` is returned unchanged.
pub fn resolve_route(
    cfg: &TestConfig,
    k: usize,
    n_train: usize,
    m_train: Option<usize>,
) -> DiscreteRoute {
    if cfg.route != DiscreteRoute::Auto {
        return cfg.route;
    }
    let small_k = (k as f64) < cfg.log_inv_delta() / cfg.eps.powi(4);
    match (cfg.class, cfg.problem) {
        (DistClass::Db | DistClass::Holder, _) => {
            if small_k {
                DiscreteRoute::Half
            } else {
                DiscreteRoute::BetterOfTwo
            }
        }
        (DistClass::D, Problem::Ts) => DiscreteRoute::Half,
        (DistClass::D, Problem::Gof) => {
            if small_k {
                DiscreteRoute::Half
            } else {
                DiscreteRoute::BestOfLogK
            }
        }
        (DistClass::D, Problem::Lfht) => {
            let m = m_train.unwrap_or(usize::MAX);
            if n_train >= k.min(m) {
                DiscreteRoute::Half
            } else {
                DiscreteRoute::BestOfLogK
            }
        }
        (DistClass::Gauss, _) => DiscreteRoute::Half,
    }
}

fn learn_half(k: usize, x: &[usize], y: Ref<'_>, rng: RngState) -> Result<Learned> {
    let cx = counts(x, k)?;
    let cy = RefCounts::of(y, k)?;
    let set = sep_set_half(&cx, cy.side(), rng.derive(STREAM_COINS))?;
    Ok(Learned { set: Some(set), tau: 0.25 })
}

fn learn_better_of_two(cfg: &TestConfig, k: usize, x: &[usize], y: Ref<'_>, rng: RngState) -> Result<Learned> {
    let h = x.len() / 2;
    let (ya, yb) = y.halves();
    if h == 0 || matches!(ya, Ref::Sample(s) if s.is_empty()) {
        return learn_half(k, x, y, rng);
    }
    let (cxa, cxb) = (counts(&x[..h], k)?, counts(&x[h..], k)?);
    let (cya, cyb) = (RefCounts::of(ya, k)?, RefCounts::of(yb, k)?);
    let all: Vec<usize> = (0..k).collect();
    let a = sep_set_directional(&cxa, cya.side(), &all, Direction::Greater)?;
    let b = sep_set_directional(&cxa, cya.side(), &all, Direction::Less)?;
    let set = select_better_of_two(a, b, &cxb, cyb.side());
    let tau = (cfg.constants.c_db * set.len() as f64 / k as f64).min(0.25);
    Ok(Learned { set: Some(set), tau })
}

fn learn_best_of_logk(
    cfg: &TestConfig,
    k: usize,
    x: &[usize],
    y: Ref<'_>,
    z: Option<&[usize]>,
    rng: RngState,
) -> Result<Learned> {
    // Reference mass estimate and the samples left for construction and holdout.
    let owned_q;
    let (qhat0, m, x_rest, y_rest): (&DiscretePmf<f64>, f64, &[usize], Ref<'_>) = match (y, z) {
        (Ref::Known(p), _) => (p, f64::INFINITY, x, y),
        (Ref::Sample(ys), Some(zs)) => {
            owned_q = empirical_pmf(&counts(zs, k)?);
            (&owned_q, 2.0 * zs.len() as f64, x, Ref::Sample(ys))
        }
        (Ref::Sample(ys), None) => {
            let t = ys.len().min(x.len()) / 3;
            owned_q = empirical_pmf(&counts(&ys[..t], k)?);
            (&owned_q, 2.0 * t as f64, &x[t..], Ref::Sample(&ys[t..]))
        }
    };
    let h = x_rest.len() / 2;
    let (yc, yh) = y_rest.halves();
    if h == 0 {
        return learn_half(k, x, y, rng);
    }
    let partition = match bucketize(qhat0, h, m, cfg.delta, cfg.constants.c0) {
        Ok(p) => p,
        Err(CatError::Precondition(_)) => return learn_half(k, x, y, rng),
        Err(e) => return Err(e),
    };
    let (cxc, cxh) = (counts(&x_rest[..h], k)?, counts(&x_rest[h..], k)?);
    let (cyc, cyh) = (RefCounts::of(yc, k)?, RefCounts::of(yh, k)?);
    let found = select_best_of_logk(
        &partition,
        &cxc,
        cyc.side(),
        &cxh,
        cyh.side(),
        cfg.eps,
        cfg.constants.c1,
    )?;
    Ok(match found {
        BestOfLogK::Found(choice) => {
            let tau = (choice.set.len() as f64 * partition.mass_bound(choice.bucket)).min(0.25);
            Learned { set: Some(choice.set), tau }
        }
        BestOfLogK::NoneFound => Learned { set: None, tau: 0.0 },
    })
}

fn learn_discrete(
    cfg: &TestConfig,
    route: DiscreteRoute,
    k: usize,
    x: &[usize],
    y: Ref<'_>,
    z: Option<&[usize]>,
    rng: RngState,
) -> Result<Learned> {
    match route {
        DiscreteRoute::Auto | DiscreteRoute::Half => learn_half(k, x, y, rng),
        DiscreteRoute::BetterOfTwo => learn_better_of_two(cfg, k, x, y, rng),
        DiscreteRoute::BestOfLogK => learn_best_of_logk(cfg, k, x, y, z, rng),
    }
}

fn set_fraction(set: &Option<DiscreteSepSet>, data: &[usize]) -> Result<f64> {
    match set {
        Some(s) => {
            let mask = s.mask();
            fraction_in(|i: usize| mask[i], data)
        }
        None => fraction_in(|_: usize| false, data),
    }
}

fn outcome_from_learned<T: Real>(set: Option<DiscreteSepSet>) -> (LearnedSet<T>, String) {
    match set {
        Some(s) => {
            let tag = s.tag().to_string();
            (LearnedSet::Discrete(s), tag)
        }
        None => (LearnedSet::Nothing, "none".to_string()),
    }
}

fn two_sided<T: Real>(
    cfg: &TestConfig,
    statistic: f64,
    tau: f64,
    n: usize,
    set: LearnedSet<T>,
    tag: String,
) -> TestOutcome<T> {
    let tau_bar = cfg.tau_bar.unwrap_or(tau);
    let threshold = cat_threshold(tau_bar, n, cfg.delta, cfg.threshold_const);
    let verdict = if statistic.abs() > threshold {
        Verdict::RejectH0
    } else {
        Verdict::AcceptH0
    };
    TestOutcome {
        verdict,
        statistic,
        threshold,
        tau_bar,
        set,
        tag,
        n,
        m: None,
    }
}

/// Symbols of a discrete or binned sample, with the alphabet size.
fn discretize<T: Real>(cfg: &TestConfig, s: &Sample<T>, what: &str) -> Result<(usize, Vec<usize>)> {
    match (cfg.class, s) {
        (DistClass::Db | DistClass::D, Sample::Symbols { k, data }) => Ok((*k, data.clone())),
        (DistClass::Holder, Sample::Rows(m)) => {
            let grid = choose_resolution(cfg.eps, cfg.constants.smoothness, cfg.constants.res_const, cfg.constants.dim)?;
            if m.cols() != cfg.constants.dim {
                return Err(CatError::invalid(format!(
                    "{what}: points have {} coordinates, expected dim = {}",
                    m.cols(),
                    cfg.constants.dim
                )));
            }
            Ok((grid.total_cells(), grid_symbols(m, &grid)?))
        }
        _ => Err(CatError::invalid(format!(
            "{what}: sample kind does not match class {}",
            cfg.class
        ))),
    }
}

fn check_problem(cfg: &TestConfig, p: Problem) -> Result<()> {
    cfg.validate()?;
    if cfg.problem != p {
        return Err(CatError::invalid(format!(
            "configuration is for {}, not {}",
            cfg.problem, p
        )));
    }
    Ok(())
}

fn gauss_rows<'a, T: Real>(s: &'a Sample<T>, what: &str, j: usize) -> Result<&'a SampleMatrix<T>> {
    match s {
        Sample::Rows(m) if m.cols() >= j => Ok(m),
        Sample::Rows(m) => Err(CatError::invalid(format!(
            "{what}: observed length {} is below the truncation level J = {j}",
            m.cols()
        ))),
        Sample::Symbols { .. } => Err(CatError::invalid(format!("{what}: expected rows for class gauss"))),
    }
}

fn gauss_level(cfg: &TestConfig) -> usize {
    truncation_level(cfg.eps, cfg.constants.smoothness, cfg.constants.level_const)
}

fn rows_fraction<T: Real>(hs: &crate::sep_gaussian::GaussianHalfspace<T>, m: &SampleMatrix<T>) -> Result<f64> {
    let rows: Vec<&[T]> = m.iter_rows().collect();
    fraction_in(|r: &[T]| hs.contains(r), &rows)
}

/// Two-sample test: is `x` drawn from the same distribution as `y`?
///
/// Each sample is split into a training half (set learning) and a test half (statistic).
pub fn run_two_sample_test<T: Real>(
    cfg: &TestConfig,
    x: &Sample<T>,
    y: &Sample<T>,
    rng: RngState,
) -> Result<TestOutcome<T>> {
    check_problem(cfg, Problem::Ts)?;
    if cfg.class == DistClass::Gauss {
        let j = gauss_level(cfg);
        let (mx, my) = (gauss_rows(x, "x", j)?, gauss_rows(y, "y", j)?);
        let (x_tr, x_te) = split_rows(mx, cfg.split)?;
        let (y_tr, y_te) = split_rows(my, cfg.split)?;
        let hs = gaussian_sep_set(&x_tr.column_means(j), &y_tr.column_means(j), j)?;
        let stat = rows_fraction(&hs, &x_te)? - rows_fraction(&hs, &y_te)?;
        let n = x_te.rows().min(y_te.rows());
        return Ok(two_sided(cfg, stat, 0.25, n, LearnedSet::Halfspace(hs), "halfspace".into()));
    }
    let (k, xs) = discretize(cfg, x, "x")?;
    let (ky, ys) = discretize(cfg, y, "y")?;
    if k != ky {
        return Err(CatError::invalid(format!("alphabet sizes differ: {k} vs {ky}")));
    }
    let (x_tr, x_te) = split_vec(&xs, cfg.split)?;
    let (y_tr, y_te) = split_vec(&ys, cfg.split)?;
    let route = resolve_route(cfg, k, x_tr.len().min(y_tr.len()), None);
    let learned = learn_discrete(cfg, route, k, &x_tr, Ref::Sample(&y_tr), None, rng)?;
    let stat = set_fraction(&learned.set, &x_te)? - set_fraction(&learned.set, &y_te)?;
    let n = x_te.len().min(y_te.len());
    let (set, tag) = outcome_from_learned(learned.set);
    Ok(two_sided(cfg, stat, learned.tau, n, set, tag))
}

/// Goodness-of-fit test of `x` against a known null.
pub fn run_gof_test<T: Real>(
    cfg: &TestConfig,
    x: &Sample<T>,
    null: &NullModel<T>,
    rng: RngState,
) -> Result<TestOutcome<T>> {
    check_problem(cfg, Problem::Gof)?;
    if cfg.class == DistClass::Gauss {
        let NullModel::Gaussian(theta0) = null else {
            return Err(CatError::invalid("class gauss needs a Gaussian null"));
        };
        let j = gauss_level(cfg);
        let (x_tr, x_te) = split_rows(gauss_rows(x, "x", j)?, cfg.split)?;
        let theta0_j: Vec<T> = (0..j).map(|i| theta0.coeff(i)).collect();
        let hs = gaussian_sep_set(&x_tr.column_means(j), &theta0_j, j)?;
        let mass0 = halfspace_mass(theta0, &hs).as_f64();
        let stat = rows_fraction(&hs, &x_te)? - mass0;
        let tau = (mass0 * (1.0 - mass0)).clamp(0.0, 0.25);
        return Ok(two_sided(cfg, stat, tau, x_te.rows(), LearnedSet::Halfspace(hs), "halfspace".into()));
    }
    let (k, xs) = discretize(cfg, x, "x")?;
    let p0: DiscretePmf<f64> = match null {
        NullModel::Discrete(p) => p.cast(),
        NullModel::UniformCube if cfg.class == DistClass::Holder => make_uniform(k)?,
        _ => return Err(CatError::invalid(format!("null model does not fit class {}", cfg.class))),
    };
    if p0.len() != k {
        return Err(CatError::invalid(format!(
            "null pmf has {} bins, data alphabet has {k}",
            p0.len()
        )));
    }
    let (x_tr, x_te) = split_vec(&xs, cfg.split)?;
    let route = resolve_route(cfg, k, x_tr.len(), None);
    let learned = learn_discrete(cfg, route, k, &x_tr, Ref::Known(&p0), None, rng)?;
    let (stat, tau) = match &learned.set {
        Some(s) => {
            let m0 = p0.mass(s.members());
            let stat = set_fraction(&learned.set, &x_te)? - m0;
            (stat, learned.tau.min(m0 * (1.0 - m0)).max(0.0))
        }
        None => (0.0, 0.0),
    };
    let (set, tag) = outcome_from_learned(learned.set);
    Ok(two_sided(cfg, stat, tau, x_te.len(), set, tag))
}

/// Likelihood-free test: is `z` drawn from the distribution of `x` or of `y`?
///
/// With `u = T_S(Z, X)` and `v = T_S(Z, Y)` on test halves, the label is X when `|u| < |v|`
/// and Y when `|u| > |v|`. Ties, and every other asymmetry of set construction, are resolved
/// in an orientation fixed by the data, so exchanging `x` and `y` exchanges the label.
pub fn run_lfht_test<T: Real>(
    cfg: &TestConfig,
    x: &Sample<T>,
    y: &Sample<T>,
    z: &Sample<T>,
    rng: RngState,
) -> Result<TestOutcome<T>> {
    check_problem(cfg, Problem::Lfht)?;
    let swap = x.fingerprint() > y.fingerprint();
    let mut out = if swap {
        lfht_oriented(cfg, y, x, z, rng)?
    } else {
        lfht_oriented(cfg, x, y, z, rng)?
    };
    let (u, v) = if swap {
        (out.threshold, out.statistic)
    } else {
        (out.statistic, out.threshold)
    };
    out.statistic = u;
    out.threshold = v.abs();
    if swap {
        out.verdict = match out.verdict {
            Verdict::LabelX => Verdict::LabelY,
            _ => Verdict::LabelX,
        };
    }
    Ok(out)
}

fn lfht_outcome<T: Real>(u: f64, v: f64, n: usize, m: usize, set: LearnedSet<T>, tag: String) -> TestOutcome<T> {
    let verdict = if u.abs() <= v.abs() {
        Verdict::LabelX
    } else {
        Verdict::LabelY
    };
    TestOutcome {
        verdict,
        statistic: u,
        // Signed here; the caller stores |v| after orientation.
        threshold: v,
        tau_bar: 0.25,
        set,
        tag,
        n,
        m: Some(m),
    }
}

fn lfht_oriented<T: Real>(
    cfg: &TestConfig,
    x: &Sample<T>,
    y: &Sample<T>,
    z: &Sample<T>,
    rng: RngState,
) -> Result<TestOutcome<T>> {
    if cfg.class == DistClass::Gauss {
        let j = gauss_level(cfg);
        let (mx, my, mz) = (gauss_rows(x, "x", j)?, gauss_rows(y, "y", j)?, gauss_rows(z, "z", j)?);
        let (x_tr, x_te) = split_rows(mx, cfg.split)?;
        let (y_tr, y_te) = split_rows(my, cfg.split)?;
        let hs = gaussian_sep_set(&x_tr.column_means(j), &y_tr.column_means(j), j)?;
        let (_, z_te) = split_rows(mz, cfg.split)?;
        let fz = rows_fraction(&hs, &z_te)?;
        let u = fz - rows_fraction(&hs, &x_te)?;
        let v = fz - rows_fraction(&hs, &y_te)?;
        let n = x_te.rows().min(y_te.rows());
        return Ok(lfht_outcome(u, v, n, z_te.rows(), LearnedSet::Halfspace(hs), "halfspace".into()));
    }
    let (k, xs) = discretize(cfg, x, "x")?;
    let (ky, ys) = discretize(cfg, y, "y")?;
    let (kz, zs) = discretize(cfg, z, "z")?;
    if k != ky || k != kz {
        return Err(CatError::invalid("alphabet sizes differ across x, y, z"));
    }
    let (x_tr, x_te) = split_vec(&xs, cfg.split)?;
    let (y_tr, y_te) = split_vec(&ys, cfg.split)?;
    let n_tr = x_tr.len().min(y_tr.len());
    let route = resolve_route(cfg, k, n_tr, Some(zs.len() / 2));
    // Z^tr feeds the reference-mass estimate of the bucketed route and is otherwise unused.
    let (z_tr, z_te) = split_vec(&zs, cfg.split)?;
    let z_tr = (route == DiscreteRoute::BestOfLogK).then_some(z_tr);
    let learned = learn_discrete(cfg, route, k, &x_tr, Ref::Sample(&y_tr), z_tr.as_deref(), rng)?;
    let fz = set_fraction(&learned.set, &z_te)?;
    let u = fz - set_fraction(&learned.set, &x_te)?;
    let v = fz - set_fraction(&learned.set, &y_te)?;
    let n = x_te.len().min(y_te.len());
    let (set, tag) = outcome_from_learned(learned.set);
    Ok(lfht_outcome(u, v, n, z_te.len(), set, tag))
}
