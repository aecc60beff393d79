mod input;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cat_core::dist::{CountVector, DiscretePmf, RngState};
use cat_core::engine::{
    cat_threshold, run_gof_test, run_lfht_test, run_two_sample_test, DiscreteRoute, DistClass,
    NullModel, Problem, Sample, SplitPolicy, TestConfig, TestOutcome,
};
use cat_core::harness::{
    emit_report, ensure_writable, estimate_sample_complexity, run_trials, CurvePoint,
    ExperimentConfig, SearchConfig,
};
use cat_core::oracle;
use cat_core::sep_discrete::{
    empirical_sep, select_better_of_two, sep_set_directional, sep_set_half, DiscreteSepSet,
    Direction,
};
use cat_core::sep_gaussian::{gaussian_sep_set, halfspace_mass, GaussianHalfspace};
use cat_core::CatError;

use input::{input_err, parse_rows, parse_symbols, read, read_mean, read_pmf, InputError};

/// Classifier-accuracy hypothesis tests.
#[derive(Parser)]
#[command(name = "cattest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one test on sample files and print the outcome as CSV.
    Test(TestArgs),
    /// Construct a separating set and optionally score it on holdout samples.
    Sep(SepArgs),
    /// Run a Monte Carlo grid from a config file.
    Mc(RunArgs),
    /// Search the empirical sample complexity of every cell in a config file.
    Complexity(ComplexityArgs),
    /// Exact small-instance computations.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Args, Default)]
struct ConstArgs {
    #[arg(long)]
    threshold_const: Option<f64>,
    #[arg(long)]
    tau_bar: Option<f64>,
    #[arg(long)]
    route: Option<DiscreteRoute>,
    #[arg(long)]
    split: Option<SplitPolicy>,
    #[arg(long)]
    c_db: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    level_const: Option<f64>,
    #[arg(long)]
    res_const: Option<f64>,
    /// Smoothness s (Gaussian) or beta (smooth densities).
    #[arg(long, alias = "beta")]
    smoothness: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
}

impl ConstArgs {
    fn apply_test(&self, t: &mut TestConfig) {
        if let Some(v) = self.threshold_const {
            t.threshold_const = v;
        }
        if self.tau_bar.is_some() {
            t.tau_bar = self.tau_bar;
        }
        if let Some(v) = self.route {
            t.route = v;
        }
        if let Some(v) = self.split {
            t.split = v;
        }
        self.apply_constants(&mut t.constants);
    }

    fn apply_experiment(&self, e: &mut ExperimentConfig) {
        if let Some(v) = self.threshold_const {
            e.threshold_const = v;
        }
        if self.tau_bar.is_some() {
            e.tau_bar = self.tau_bar;
        }
        if let Some(v) = self.route {
            e.route = v;
        }
        if let Some(v) = self.split {
            e.split = v;
        }
        self.apply_constants(&mut e.constants);
    }

    fn apply_constants(&self, c: &mut cat_core::engine::Constants) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.c_db, self.c_db);
        set(&mut c.c0, self.c0);
        set(&mut c.c1, self.c1);
        set(&mut c.level_const, self.level_const);
        set(&mut c.res_const, self.res_const);
        set(&mut c.smoothness, self.smoothness);
        if let Some(d) = self.dim {
            c.dim = d;
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// TOML file with test settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<Problem>,
    #[arg(long)]
    class: Option<DistClass>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Alphabet size for symbol samples (defaults to the null pmf length).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    z: Option<PathBuf>,
    /// Null pmf (discrete or binned) or null mean sequence (Gaussian).
    #[arg(long)]
    null: Option<PathBuf>,
    /// Ellipsoid size bound of a Gaussian null.
    #[arg(long, default_value_t = 1.0)]
    size_bound: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    consts: ConstArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SepMethod {
    Half,
    Greater,
    Less,
    BetterOfTwo,
    Halfspace,
}

#[derive(Args)]
struct SepArgs {
    #[arg(long, value_enum)]
    method: SepMethod,
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    /// Alphabet size (discrete methods).
    #[arg(long)]
    k: Option<usize>,
    /// Truncation level (halfspace).
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    holdout_x: Option<PathBuf>,
    #[arg(long)]
    holdout_y: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the set here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    consts: ConstArgs,
}

#[derive(Args)]
struct ComplexityArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// P(S) − Q(S).
    ExactSep(SetPair),
    /// min(P(S)P(S^c), Q(S)Q(S^c)).
    ExactTau(SetPair),
    /// P(Poi(mu) > Poi(lambda)) and P(Poi(mu) = Poi(lambda)).
    PoissonCompare {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// Expected separation of a count-comparison set at Poisson rate n.
    ExpectedSep {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        n: f64,
        #[arg(long, value_enum)]
        set: ExpectedSet,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// (P(X>Y) + P(X=Y)/2 − 1/2) / min((mu−lambda)/√(lambda+1), 1).
    LemmaRatio {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// Balanced randomized classifier of two pmfs.
    Balanced {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Exact P(|Ā − B̄| > threshold) under both hypotheses by enumeration.
    CatError {
        #[arg(long)]
        p_mass: f64,
        #[arg(long)]
        q_mass: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        threshold: f64,
    },
    /// √(c τ̄ ln(1/δ)/n) + c ln(1/δ)/n.
    Threshold {
        #[arg(long)]
        tau_bar: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = TestConfig::DEFAULT_THRESHOLD_CONST)]
        c: f64,
    },
    /// Exact Gaussian mass of a halfspace.
    HalfspaceMass {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long)]
        halfspace: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        smoothness: f64,
        #[arg(long, default_value_t = 1.0)]
        size_bound: f64,
    },
}

#[derive(Args)]
struct SetPair {
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectedSet {
    Half,
    Greater,
    Less,
}

fn load_test_config(a: &TestArgs) -> Result<TestConfig> {
    let mut cfg = match &a.config {
        Some(path) => toml::from_str::<TestConfig>(&read(path)?)
            .map_err(|e| input_err(format!("{}: {e}", path.display())))?,
        None => {
            let need = |what: &str| input_err(format!("--{what} is required without --config"));
            TestConfig::new(
                a.problem.ok_or_else(|| need("problem"))?,
                a.class.ok_or_else(|| need("class"))?,
                a.eps.ok_or_else(|| need("eps"))?,
                a.delta.ok_or_else(|| need("delta"))?,
            )
        }
    };
    if let Some(v) = a.problem {
        cfg.problem = v;
    }
    if let Some(v) = a.class {
        cfg.class = v;
    }
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = a.delta {
        cfg.delta = v;
    }
    a.consts.apply_test(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn load_sample(path: &Path, class: DistClass, k: Option<usize>) -> Result<Sample<f64>> {
    let text = read(path)?;
    let ctx = || format!("in {}", path.display());
    Ok(match class {
        DistClass::Db | DistClass::D => {
            let k = k.ok_or_else(|| input_err("symbol samples need --k or a null pmf"))?;
            Sample::symbols(k, parse_symbols(&text).with_context(ctx)?).with_context(ctx)?
        }
        DistClass::Holder | DistClass::Gauss => Sample::Rows(parse_rows(&text).with_context(ctx)?),
    })
}

fn cmd_test(a: TestArgs) -> Result<()> {
    let cfg = load_test_config(&a)?;
    let discrete = matches!(cfg.class, DistClass::Db | DistClass::D | DistClass::Holder);
    let null = match (&a.null, cfg.problem) {
        (Some(path), Problem::Gof) if discrete => Some(NullModel::Discrete(read_pmf(path)?)),
        (Some(path), Problem::Gof) => Some(NullModel::Gaussian(read_mean(
            path,
            cfg.constants.smoothness,
            a.size_bound,
        )?)),
        (None, Problem::Gof) if cfg.class == DistClass::Holder => Some(NullModel::UniformCube),
        (None, Problem::Gof) => return Err(input_err("goodness-of-fit needs --null")),
        _ => None,
    };
    let k = a.k.or(match &null {
        Some(NullModel::Discrete(p)) if cfg.class != DistClass::Holder => Some(p.len()),
        _ => None,
    });
    let x = load_sample(&a.x, cfg.class, k)?;
    let rng = RngState::new(a.seed);
    let need = |flag: &str| input_err(format!("{} needs --{flag}", cfg.problem));
    let out: TestOutcome = match cfg.problem {
        Problem::Gof => run_gof_test(&cfg, &x, null.as_ref().expect("checked above"), rng)?,
        Problem::Ts => {
            let y = load_sample(a.y.as_deref().ok_or_else(|| need("y"))?, cfg.class, k)?;
            run_two_sample_test(&cfg, &x, &y, rng)?
        }
        Problem::Lfht => {
            let y = load_sample(a.y.as_deref().ok_or_else(|| need("y"))?, cfg.class, k)?;
            let z = load_sample(a.z.as_deref().ok_or_else(|| need("z"))?, cfg.class, k)?;
            run_lfht_test(&cfg, &x, &y, &z, rng)?
        }
    };
    println!("{}", TestOutcome::<f64>::CSV_HEADER);
    println!("{}", out.to_csv_row(&cfg, a.seed));
    Ok(())
}

fn counts_of(path: &Path, k: usize) -> Result<CountVector> {
    let syms = parse_symbols(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    CountVector::from_symbols(&syms, k).with_context(|| format!("in {}", path.display()))
}

fn cmd_sep(a: SepArgs) -> Result<()> {
    let holdout = match (&a.holdout_x, &a.holdout_y) {
        (Some(hx), Some(hy)) => Some((hx.clone(), hy.clone())),
        (None, None) => None,
        _ => return Err(input_err("give both --holdout-x and --holdout-y")),
    };
    let (text, score) = if let SepMethod::Halfspace = a.method {
        let j = a.j.ok_or_else(|| input_err("halfspace needs --j"))?;
        let mx = parse_rows(&read(&a.x)?)?;
        let my = parse_rows(&read(&a.y)?)?;
        if mx.cols() < j || my.cols() < j {
            return Err(input_err(format!("samples have fewer than J = {j} columns")));
        }
        let hs = gaussian_sep_set(&mx.column_means(j), &my.column_means(j), j)?;
        let score = match &holdout {
            Some((hx, hy)) => {
                let frac = |p: &Path| -> Result<f64> {
                    let m = parse_rows(&read(p)?)?;
                    Ok(m.iter_rows().filter(|r| hs.contains(r)).count() as f64 / m.rows().max(1) as f64)
                };
                Some(frac(hx)? - frac(hy)?)
            }
            None => None,
        };
        (hs.to_text(), score)
    } else {
        let k = a.k.ok_or_else(|| input_err("discrete methods need --k"))?;
        let cx = counts_of(&a.x, k)?;
        let cy = counts_of(&a.y, k)?;
        let all: Vec<usize> = (0..k).collect();
        let hold = match &holdout {
            Some((hx, hy)) => Some((counts_of(hx, k)?, counts_of(hy, k)?)),
            None => None,
        };
        let set: DiscreteSepSet = match a.method {
            SepMethod::Half => sep_set_half(&cx, &cy, RngState::new(a.seed))?,
            SepMethod::Greater => sep_set_directional(&cx, &cy, &all, Direction::Greater)?,
            SepMethod::Less => sep_set_directional(&cx, &cy, &all, Direction::Less)?,
            SepMethod::BetterOfTwo => {
                let (hx, hy) = hold
                    .as_ref()
                    .ok_or_else(|| input_err("better-of-two needs holdout samples"))?;
                let g = sep_set_directional(&cx, &cy, &all, Direction::Greater)?;
                let l = sep_set_directional(&cx, &cy, &all, Direction::Less)?;
                select_better_of_two(g, l, hx, hy)
            }
            SepMethod::Halfspace => unreachable!(),
        };
        let score = hold.as_ref().map(|(hx, hy)| empirical_sep(&set, hx, hy));
        (set.to_text(), score)
    };
    match &a.out {
        Some(path) => std::fs::write(path, &text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(s) = score {
        println!("holdout_sep {s}");
    }
    Ok(())
}

fn load_experiment(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_toml(&read(&a.config)?)
        .map_err(|e| input_err(format!("{}: {e}", a.config.display())))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if a.output.is_some() {
        cfg.output = a.output.clone();
    }
    a.consts.apply_experiment(&mut cfg);
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.output
        .clone()
        .ok_or_else(|| input_err("no output directory: set `output` or pass --output"))
}

fn cmd_mc(a: RunArgs) -> Result<()> {
    let cfg = load_experiment(&a)?;
    cfg.validate()?;
    let dir = output_dir(&cfg)?;
    let reports = run_trials(&cfg)?;
    emit_report(&reports, &[], &cfg, &dir)?;
    println!("wrote {} cells to {}", reports.len(), dir.display());
    Ok(())
}

fn cmd_complexity(a: ComplexityArgs) -> Result<()> {
    let mut cfg = load_experiment(&a.run)?;
    let mut search = cfg.search.unwrap_or(SearchConfig {
        n_min: 16,
        n_max: 1 << 20,
        ratio: 1.3,
    });
    if let Some(v) = a.n_min {
        search.n_min = v;
    }
    if let Some(v) = a.n_max {
        search.n_max = v;
    }
    if let Some(v) = a.ratio {
        search.ratio = v;
    }
    cfg.search = Some(search);
    cfg.validate()?;
    let dir = output_dir(&cfg)?;
    ensure_writable(&dir)?;
    let mut reports = Vec::new();
    let mut curves = Vec::new();
    for cell in cfg.cells() {
        let r = estimate_sample_complexity(&cfg, &cell)?;
        let p = CurvePoint::from(&r);
        match p.n_star {
            Some(n) => println!("{} {} k={} eps={}: n* = {n}", p.problem, p.class, p.k, p.eps),
            None => println!("{} {} k={} eps={}: censored", p.problem, p.class, p.k, p.eps),
        }
        curves.push(p);
        reports.extend(r.evaluations);
    }
    emit_report(&reports, &curves, &cfg, &dir)?;
    Ok(())
}

fn read_set_pair(s: &SetPair) -> Result<(DiscreteSepSet, DiscretePmf<f64>, DiscretePmf<f64>)> {
    let set = DiscreteSepSet::parse_text(&read(&s.set)?)
        .with_context(|| format!("in {}", s.set.display()))?;
    Ok((set, read_pmf(&s.p)?, read_pmf(&s.q)?))
}

fn fmt_set(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_oracle(c: OracleCmd) -> Result<()> {
    match c {
        OracleCmd::ExactSep(s) => {
            let (set, p, q) = read_set_pair(&s)?;
            println!("{}", oracle::exact_sep(&set, &p, &q)?);
        }
        OracleCmd::ExactTau(s) => {
            let (set, p, q) = read_set_pair(&s)?;
            println!("{}", oracle::exact_tau(&set, &p, &q)?);
        }
        OracleCmd::PoissonCompare { mu, lambda, tol } => {
            let (gt, eq) = oracle::poisson_compare(mu, lambda, tol)?;
            println!("p_gt {gt}\np_eq {eq}");
        }
        OracleCmd::ExpectedSep { p, q, n, set, tol } => {
            let (p, q) = (read_pmf(&p)?, read_pmf(&q)?);
            let v = match set {
                ExpectedSet::Half => oracle::expected_sep_half(&p, &q, n, tol)?,
                ExpectedSet::Greater => {
                    oracle::expected_sep_directional(&p, &q, n, Direction::Greater, tol)?
                }
                ExpectedSet::Less => oracle::expected_sep_directional(&p, &q, n, Direction::Less, tol)?,
            };
            println!("{v}");
        }
        OracleCmd::LemmaRatio { mu, lambda, tol } => {
            println!("{}", oracle::lemma_e_lower_check(mu, lambda, tol)?);
        }
        OracleCmd::Balanced { p, q } => {
            let (p, q) = (read_pmf(&p)?, read_pmf(&q)?);
            let b = oracle::balanced_classifier(&p, &q)?;
            println!("hard {}", fmt_set(&b.hard_set));
            println!("boundary {}", fmt_set(&b.boundary_set));
            println!("boundary_prob {}", b.boundary_prob);
            println!("separation {}", b.separation(&p, &q));
        }
        OracleCmd::CatError { p_mass, q_mass, n, threshold } => {
            let e = oracle::exact_cat_error(p_mass, q_mass, n, threshold)?;
            println!("reject {}\naccept {}", e.reject, e.accept);
        }
        OracleCmd::Threshold { tau_bar, n, delta, c } => {
            if !(0.0..=0.25).contains(&tau_bar) || n == 0 || !(delta > 0.0 && delta < 1.0) || c.is_nan() || c <= 0.0 {
                return Err(input_err("need tau_bar in [0, 1/4], n ≥ 1, delta in (0, 1), c > 0"));
            }
            println!("{}", cat_threshold(tau_bar, n, delta, c));
        }
        OracleCmd::HalfspaceMass { theta, halfspace, smoothness, size_bound } => {
            let th = read_mean(&theta, smoothness, size_bound)?;
            let hs = GaussianHalfspace::<f64>::parse_text(&read(&halfspace)?)
                .with_context(|| format!("in {}", halfspace.display()))?;
            println!("{}", halfspace_mass(&th, &hs));
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<CatError>() {
            return if e.is_input_error() { 1 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Sep(a) => cmd_sep(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Complexity(a) => cmd_complexity(a),
        Command::Oracle(c) => cmd_oracle(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
