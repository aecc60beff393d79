//! Separating sets over a finite alphabet.
//!
//! Bins are 0-based. The Y side of every construction is either an observed count vector or,
//! for goodness-of-fit, a known pmf; with a known pmf the comparison value of bin `i` is the
//! expected count `N_x·q_i` and the holdout mass is `q(S)` exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::dist::{CountVector, DiscretePmf, RngState};
use crate::error::{CatError, Result};
use crate::real::{compensated_sum, robust_ceil, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Greater,
    Less,
}

/// How a set was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SepTag {
    Half,
    Greater,
    Less,
    BestOfLogK { bucket: usize, direction: Direction },
}

impl fmt::Display for SepTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SepTag::Half => write!(f, "half"),
            SepTag::Greater => write!(f, "greater"),
            SepTag::Less => write!(f, "less"),
            SepTag::BestOfLogK { bucket, direction } => {
                let d = match direction {
                    Direction::Greater => "gt",
                    Direction::Less => "lt",
                };
                write!(f, "logk:{bucket}:{d}")
            }
        }
    }
}

impl FromStr for SepTag {
    type Err = CatError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => return Ok(SepTag::Half),
            "greater" => return Ok(SepTag::Greater),
            "less" => return Ok(SepTag::Less),
            _ => {}
        }
        let bad = || CatError::invalid(format!("unknown set tag {s:?}"));
        let rest = s.strip_prefix("logk:").ok_or_else(bad)?;
        let (j, d) = rest.split_once(':').ok_or_else(bad)?;
        let bucket = j.parse().map_err(|_| bad())?;
        let direction = match d {
            "gt" => Direction::Greater,
            "lt" => Direction::Less,
            _ => return Err(bad()),
        };
        Ok(SepTag::BestOfLogK { bucket, direction })
    }
}

/// A subset of `{0, …, k-1}` with its construction tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteSepSet {
    k: usize,
    members: Vec<usize>,
    tag: SepTag,
}

impl DiscreteSepSet {
    /// Sorts and deduplicates `members`; all must lie below `k`.
    pub fn new(k: usize, mut members: Vec<usize>, tag: SepTag) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= k {
                return Err(CatError::invalid(format!("bin {last} outside alphabet of size {k}")));
            }
        }
        Ok(DiscreteSepSet { k, members, tag })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn tag(&self) -> SepTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Indicator vector of length `k`.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.k];
        for &i in &self.members {
            m[i] = true;
        }
        m
    }

    /// Complement within `domain` (or the whole alphabet when `None`).
    pub fn complement_within(&self, domain: Option<&[usize]>, tag: SepTag) -> DiscreteSepSet {
        let members = match domain {
            Some(d) => d.iter().copied().filter(|i| !self.contains(*i)).collect(),
            None => (0..self.k).filter(|i| !self.contains(*i)).collect(),
        };
        DiscreteSepSet::new(self.k, members, tag).expect("complement stays in range")
    }

    /// Line format: `tag <tag>`, `k <k>`, then one bin index per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("tag {}\nk {}\n", self.tag, self.k);
        for i in &self.members {
            s.push_str(&format!("{i}\n"));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut tag = None;
        let mut k = None;
        let mut members = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| CatError::Parse { line: ln + 1, msg };
            if let Some(t) = line.strip_prefix("tag ") {
                tag = Some(t.trim().parse::<SepTag>().map_err(|e| perr(e.to_string()))?);
            } else if let Some(v) = line.strip_prefix("k ") {
                k = Some(v.trim().parse::<usize>().map_err(|_| perr(format!("bad k {v:?}")))?);
            } else {
                members.push(line.parse::<usize>().map_err(|_| perr(format!("bad index {line:?}")))?);
            }
        }
        let k = k.ok_or_else(|| CatError::invalid("missing `k` line"))?;
        DiscreteSepSet::new(k, members, tag.unwrap_or(SepTag::Half))
    }
}

/// Reference side of a comparison: observed counts or a known pmf.
#[derive(Clone, Copy, Debug)]
pub enum YSide<'a> {
    Counts(&'a CountVector),
    Known(&'a DiscretePmf<f64>),
}

impl<'a> From<&'a CountVector> for YSide<'a> {
    fn from(c: &'a CountVector) -> Self {
        YSide::Counts(c)
    }
}

impl<'a> From<&'a DiscretePmf<f64>> for YSide<'a> {
    fn from(p: &'a DiscretePmf<f64>) -> Self {
        YSide::Known(p)
    }
}

impl YSide<'_> {
    fn k(&self) -> usize {
        match self {
            YSide::Counts(c) => c.k(),
            YSide::Known(p) => p.len(),
        }
    }

    /// Comparison value of bin `i` against a sample of `n_x` draws.
    fn value(&self, i: usize, n_x: u64) -> f64 {
        match self {
            YSide::Counts(c) => c.get(i) as f64,
            YSide::Known(p) => n_x as f64 * p.prob(i),
        }
    }

    /// Empirical (or exact) mass of `members`.
    pub fn mass(&self, members: &[usize]) -> f64 {
        match self {
            YSide::Counts(c) => c.fraction(members),
            YSide::Known(p) => p.mass(members),
        }
    }
}

fn check_sizes(x: &CountVector, y: &YSide<'_>) -> Result<()> {
    if x.k() != y.k() {
        return Err(CatError::invalid(format!(
            "alphabet sizes differ: {} vs {}",
            x.k(),
            y.k()
        )));
    }
    Ok(())
}

/// Fair coins, one per bin, drawn 64 at a time.
pub fn draw_coins(k: usize, rng: RngState) -> Vec<bool> {
    let mut r = rng.rng();
    let mut coins = Vec::with_capacity(k);
    while coins.len() < k {
        let w: u64 = r.random();
        for b in 0..64.min(k - coins.len()) {
            coins.push((w >> b) & 1 == 1);
        }
    }
    coins
}

/// `{i: x_i > y_i, or x_i = y_i and C_i = 1}` with coins drawn from `rng`.
pub fn sep_set_half<'a>(
    x: &CountVector,
    y: impl Into<YSide<'a>>,
    rng: RngState,
) -> Result<DiscreteSepSet> {
    let coins = draw_coins(x.k(), rng);
    sep_set_half_with_coins(x, y, &coins)
}

/// As [`sep_set_half`] with caller-supplied coins.
pub fn sep_set_half_with_coins<'a>(
    x: &CountVector,
    y: impl Into<YSide<'a>>,
    coins: &[bool],
) -> Result<DiscreteSepSet> {
    let y = y.into();
    check_sizes(x, &y)?;
    if coins.len() != x.k() {
        return Err(CatError::invalid("need one coin per bin"));
    }
    let n = x.total();
    let members = (0..x.k())
        .filter(|&i| {
            let (a, b) = (x.get(i) as f64, y.value(i, n));
            a > b || (a == b && coins[i])
        })
        .collect();
    DiscreteSepSet::new(x.k(), members, SepTag::Half)
}

/// `{i ∈ domain: x_i > y_i}` (Greater) or `{i ∈ domain: x_i < y_i}` (Less). Ties never enter.
pub fn sep_set_directional<'a>(
    x: &CountVector,
    y: impl Into<YSide<'a>>,
    domain: &[usize],
    direction: Direction,
) -> Result<DiscreteSepSet> {
    let y = y.into();
    check_sizes(x, &y)?;
    if let Some(&bad) = domain.iter().find(|&&i| i >= x.k()) {
        return Err(CatError::invalid(format!("domain index {bad} out of range")));
    }
    let n = x.total();
    let members = domain
        .iter()
        .copied()
        .filter(|&i| {
            let (a, b) = (x.get(i) as f64, y.value(i, n));
            match direction {
                Direction::Greater => a > b,
                Direction::Less => a < b,
            }
        })
        .collect();
    let tag = match direction {
        Direction::Greater => SepTag::Greater,
        Direction::Less => SepTag::Less,
    };
    DiscreteSepSet::new(x.k(), members, tag)
}

/// `x̂(S) − ŷ(S)` on a holdout sample.
pub fn empirical_sep<'a>(set: &DiscreteSepSet, hx: &CountVector, hy: impl Into<YSide<'a>>) -> f64 {
    let hy = hy.into();
    hx.fraction(set.members()) - hy.mass(set.members())
}

/// Keeps the candidate with the larger holdout |ŝep|; ties go to `cand_a`.
///
/// The holdout counts must be independent of the counts that built the candidates.
pub fn select_better_of_two<'a>(
    cand_a: DiscreteSepSet,
    cand_b: DiscreteSepSet,
    holdout_x: &CountVector,
    holdout_y: impl Into<YSide<'a>>,
) -> DiscreteSepSet {
    let hy = holdout_y.into();
    let sa = empirical_sep(&cand_a, holdout_x, hy).abs();
    let sb = empirical_sep(&cand_b, holdout_x, hy).abs();
    if sb > sa {
        cand_b
    } else {
        cand_a
    }
}

/// Alphabet split into slabs of comparable reference mass.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketPartition {
    k: usize,
    n: usize,
    t: f64,
    ell: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketPartition {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Construction sample size the partition was built for.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `D_0, …, D_{ℓ+1}`.
    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    /// Upper bound on the reference mass of any bin in bucket `j`, valid on the localization
    /// event: `2/t` for `D_0`, `2^{j+1}/t` for `D_j`, unbounded for the last bucket.
    pub fn mass_bound(&self, j: usize) -> f64 {
        if j == 0 {
            2.0 / self.t
        } else if j <= self.ell {
            2f64.powi(j as i32 + 1) / self.t
        } else {
            f64::INFINITY
        }
    }

    /// Acceptance scale Ẽ_j at separation `eps' = eps/(ℓ+2)`.
    pub fn expected_sep_scale(&self, j: usize, eps: f64) -> f64 {
        let e = eps / (self.ell as f64 + 2.0);
        let (n, k) = (self.n as f64, self.k as f64);
        if j == 0 {
            n * e * e / k
        } else if j <= self.ell {
            n * e * e / (k * self.t / 2f64.powi(j as i32)).sqrt()
        } else {
            (n / k).sqrt() * e * e
        }
    }
}

/// Splits the alphabet by reference mass `qhat0` on the scale `t = k ∧ c0·m/ln(1/δ)`.
///
/// Pass `m = f64::INFINITY` when the reference pmf is known exactly. Fails when `t ≤ n`, in
/// which case the caller should use the tie-broken half set instead.
pub fn bucketize<T: Real>(
    qhat0: &DiscretePmf<T>,
    n: usize,
    m: f64,
    delta: f64,
    c0: f64,
) -> Result<BucketPartition> {
    if !(delta > 0.0 && delta < 1.0) || !(c0 > 0.0) || n == 0 {
        return Err(CatError::invalid("need 0 < delta < 1, c0 > 0 and n ≥ 1"));
    }
    let k = qhat0.len();
    let t = (k as f64).min(c0 * m / (1.0 / delta).ln());
    if t <= n as f64 {
        return Err(CatError::Precondition(format!(
            "support scale t = {t:.3} does not exceed n = {n}; use the half set instead"
        )));
    }
    let ell = (robust_ceil((t / n as f64).log2()) as usize).max(1);
    let mut buckets = vec![Vec::new(); ell + 2];
    for (i, q) in qhat0.probs().iter().enumerate() {
        let q = q.as_f64();
        let mut j = 0;
        if q > 1.0 / t {
            j = ell + 1;
            for jj in 1..=ell {
                if q <= 2f64.powi(jj as i32) / t {
                    j = jj;
                    break;
                }
            }
        }
        buckets[j].push(i);
    }
    Ok(BucketPartition { k, n, t, ell, buckets })
}

/// A passing candidate from [`select_best_of_logk`].
#[derive(Clone, Debug, PartialEq)]
pub struct LogkChoice {
    pub set: DiscreteSepSet,
    pub bucket: usize,
    pub direction: Direction,
    pub holdout_sep: f64,
    pub acceptance: f64,
}

/// Result of the bucketed search; `NoneFound` when no candidate clears its bar.
#[derive(Clone, Debug, PartialEq)]
pub enum BestOfLogK {
    Found(LogkChoice),
    NoneFound,
}

/// Scans `Ŝ_s(D_j)` for `j = 0, …, ℓ+1` (Greater before Less) and returns the first candidate
/// whose holdout |ŝep| reaches `c1·Ẽ_j`.
///
/// Holdout counts must be independent of `x`, `y` and of the sample behind the partition.
pub fn select_best_of_logk<'a, 'b>(
    partition: &BucketPartition,
    x: &CountVector,
    y: impl Into<YSide<'a>>,
    holdout_x: &CountVector,
    holdout_y: impl Into<YSide<'b>>,
    eps: f64,
    c1: f64,
) -> Result<BestOfLogK> {
    let y = y.into();
    let hy = holdout_y.into();
    check_sizes(x, &y)?;
    check_sizes(holdout_x, &hy)?;
    if x.k() != partition.k {
        return Err(CatError::invalid("partition built for a different alphabet"));
    }
    for (j, domain) in partition.buckets.iter().enumerate() {
        let bar = c1 * partition.expected_sep_scale(j, eps);
        for direction in [Direction::Greater, Direction::Less] {
            let cand = sep_set_directional(x, y, domain, direction)?;
            let s = empirical_sep(&cand, holdout_x, hy);
            if s.abs() >= bar && !cand.is_empty() {
                let set = DiscreteSepSet {
                    tag: SepTag::BestOfLogK { bucket: j, direction },
                    ..cand
                };
                return Ok(BestOfLogK::Found(LogkChoice {
                    set,
                    bucket: j,
                    direction,
                    holdout_sep: s,
                    acceptance: bar,
                }));
            }
        }
    }
    Ok(BestOfLogK::NoneFound)
}

/// Empirical pmf of a count vector; uniform when the sample is empty.
pub fn empirical_pmf(c: &CountVector) -> DiscretePmf<f64> {
    if c.total() == 0 {
        return crate::dist::make_uniform(c.k().max(1)).expect("k ≥ 1");
    }
    let n = c.total() as f64;
    let probs: Vec<f64> = c.counts().iter().map(|&v| v as f64 / n).collect();
    let s = compensated_sum(probs.iter().copied());
    DiscretePmf::new(probs.into_iter().map(|p| p / s).collect()).expect("normalized counts")
}
