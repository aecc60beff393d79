//! Exact small-instance computations used as ground truth.

use crate::dist::{tv_distance, DiscretePmf, GaussianMean};
use crate::error::{CatError, Result};
use crate::real::{compensated_sum, NeumaierSum, Real};
use crate::sep_discrete::{DiscreteSepSet, Direction};
use crate::sep_gaussian::GaussianHalfspace;
use crate::special::{ln_poisson_pmf, normal_cdf};

fn check_pair<T: Real>(set: &DiscreteSepSet, p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> Result<()> {
    if p.len() != q.len() || set.k() != p.len() {
        return Err(CatError::invalid(format!(
            "alphabet sizes differ: set {}, p {}, q {}",
            set.k(),
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `p(S) − q(S)`.
pub fn exact_sep<T: Real>(set: &DiscreteSepSet, p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> Result<T> {
    check_pair(set, p, q)?;
    Ok(compensated_sum(set.members().iter().map(|&i| p.prob(i) - q.prob(i))))
}

/// `min(p(S)(1−p(S)), q(S)(1−q(S)))`.
pub fn exact_tau<T: Real>(set: &DiscreteSepSet, p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> Result<T> {
    check_pair(set, p, q)?;
    let bern = |m: T| {
        let m = m.min(T::one()).max(T::zero());
        m * (T::one() - m)
    };
    Ok(bern(p.mass(set.members())).min(bern(q.mass(set.members()))))
}

/// Truncation window `[lo, hi]` of Poi(rate) with both tails below `tol`.
fn poisson_window(rate: f64, tol: f64) -> (u64, u64) {
    if rate == 0.0 {
        return (0, 0);
    }
    let mut w = 12.0 * rate.sqrt() + 30.0;
    loop {
        let hi = rate + w;
        let lo = (rate - w).max(0.0);
        // Chernoff tails: P(X ≥ λ + x) ≤ exp(−x²/(2(λ+x))), P(X ≤ λ − x) ≤ exp(−x²/(2λ)).
        let upper = (-(w * w) / (2.0 * (rate + w))).exp();
        let lower = if lo == 0.0 { 0.0 } else { (-(w * w) / (2.0 * rate)).exp() };
        if upper < tol && lower < tol {
            return (lo.floor() as u64, hi.ceil() as u64);
        }
        w *= 2.0;
    }
}

/// `(P(Poi(μ) > Poi(λ)), P(Poi(μ) = Poi(λ)))` by truncated double summation.
pub fn poisson_compare(mu: f64, lambda: f64, tol: f64) -> Result<(f64, f64)> {
    if !(mu >= 0.0 && lambda >= 0.0 && mu.is_finite() && lambda.is_finite()) || !(tol > 0.0) {
        return Err(CatError::invalid("rates must be finite and non-negative, tol positive"));
    }
    let (mlo, mhi) = poisson_window(mu, tol);
    let (llo, lhi) = poisson_window(lambda, tol);
    let fmu: Vec<f64> = (mlo..=mhi).map(|j| ln_poisson_pmf(mu, j).exp()).collect();
    // surv[i] = P(X > mlo + i) restricted to the window.
    let mut surv = vec![0.0; fmu.len()];
    let mut acc = NeumaierSum::<f64>::default();
    for i in (0..fmu.len()).rev() {
        surv[i] = acc.value();
        acc.add(fmu[i]);
    }
    let window_mass = acc.value();
    let mut gt = NeumaierSum::<f64>::default();
    let mut eq = NeumaierSum::<f64>::default();
    for j in llo..=lhi {
        let fl = ln_poisson_pmf(lambda, j).exp();
        if fl == 0.0 {
            continue;
        }
        if j < mlo {
            gt.add(fl * window_mass);
        } else if j <= mhi {
            let i = (j - mlo) as usize;
            gt.add(fl * surv[i]);
            eq.add(fl * fmu[i]);
        }
    }
    Ok((gt.value().clamp(0.0, 1.0), eq.value().clamp(0.0, 1.0)))
}

/// Expected separation of the strict-comparison set built from `Poi(n p)` and `Poi(n q)`
/// counts: `Σ_i (p_i − q_i)·P(i ∈ Ŝ)`.
pub fn expected_sep_directional<T: Real>(
    p: &DiscretePmf<T>,
    q: &DiscretePmf<T>,
    n: f64,
    direction: Direction,
    tol: f64,
) -> Result<f64> {
    check_rates(p, q, n)?;
    let mut acc = NeumaierSum::<f64>::default();
    for (pi, qi) in p.probs().iter().zip(q.probs()) {
        let (pi, qi) = (pi.as_f64(), qi.as_f64());
        if pi == qi {
            continue;
        }
        let prob = match direction {
            Direction::Greater => poisson_compare(n * pi, n * qi, tol)?.0,
            Direction::Less => poisson_compare(n * qi, n * pi, tol)?.0,
        };
        acc.add((pi - qi) * prob);
    }
    Ok(acc.value())
}

/// Expected separation of the tie-broken half set.
pub fn expected_sep_half<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>, n: f64, tol: f64) -> Result<f64> {
    check_rates(p, q, n)?;
    let mut acc = NeumaierSum::<f64>::default();
    let mut diff = NeumaierSum::<f64>::default();
    for (pi, qi) in p.probs().iter().zip(q.probs()) {
        let (pi, qi) = (pi.as_f64(), qi.as_f64());
        if pi == qi {
            continue;
        }
        let (gt, eq) = poisson_compare(n * pi, n * qi, tol)?;
        acc.add((pi - qi) * (gt + 0.5 * eq - 0.5));
        diff.add(pi - qi);
    }
    Ok(acc.value() + 0.5 * diff.value())
}

fn check_rates<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>, n: f64) -> Result<()> {
    if p.len() != q.len() {
        return Err(CatError::invalid("alphabet sizes differ"));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(CatError::invalid("rate must be finite and non-negative"));
    }
    Ok(())
}

/// `(P(X>Y) + ½P(X=Y) − ½) / min((μ−λ)/√(λ+1), 1)` for `X ~ Poi(μ)`, `Y ~ Poi(λ)`.
pub fn lemma_e_lower_check(mu: f64, lambda: f64, tol: f64) -> Result<f64> {
    if !(mu > lambda) || lambda < 0.0 {
        return Err(CatError::invalid("need mu > lambda ≥ 0"));
    }
    let (gt, eq) = poisson_compare(mu, lambda, tol)?;
    let lhs = gt + 0.5 * eq - 0.5;
    let scale = ((mu - lambda) / (lambda + 1.0).sqrt()).min(1.0);
    Ok(lhs / scale)
}

/// `Σ_i min(n(p_i−q_i)²/√(n(p_i∧q_i)+1), |p_i−q_i|)`.
pub fn directional_gap_scale<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>, n: f64) -> Result<f64> {
    check_rates(p, q, n)?;
    Ok(compensated_sum(p.probs().iter().zip(q.probs()).map(|(a, b)| {
        let (a, b) = (a.as_f64(), b.as_f64());
        let d = (a - b).abs();
        (n * d * d / (n * a.min(b) + 1.0).sqrt()).min(d)
    })))
}

/// `Σ_i min((p_i−q_i)², (p_i+q_i)/n)`.
pub fn sep_variance_scale<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>, n: f64) -> Result<f64> {
    check_rates(p, q, n)?;
    Ok(compensated_sum(p.probs().iter().zip(q.probs()).map(|(a, b)| {
        let (a, b) = (a.as_f64(), b.as_f64());
        ((a - b).powi(2)).min((a + b) / n)
    })))
}

/// Randomized classifier with `p(C=0) + q(C=0) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedClassifier<T: Real = f64> {
    /// Bins labelled 0 deterministically.
    pub hard_set: Vec<usize>,
    /// Bins labelled 0 with probability `boundary_prob`.
    pub boundary_set: Vec<usize>,
    pub boundary_prob: T,
}

impl<T: Real> BalancedClassifier<T> {
    /// `P(C = 0)` under `p`.
    pub fn label0_prob(&self, p: &DiscretePmf<T>) -> T {
        p.mass(&self.hard_set) + self.boundary_prob * p.mass(&self.boundary_set)
    }

    /// `p(C=0) − q(C=0)`.
    pub fn separation(&self, p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> T {
        self.label0_prob(p) - self.label0_prob(q)
    }
}

/// The balanced classifier from the `E_t` threshold sweep over realized likelihood ratios.
pub fn balanced_classifier<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> Result<BalancedClassifier<T>> {
    if p.len() != q.len() {
        return Err(CatError::invalid("alphabet sizes differ"));
    }
    let k = p.len();
    let total = |idx: &[usize]| p.mass(idx) + q.mass(idx);
    let nonneg: Vec<usize> = (0..k)
        .filter(|&i| p.prob(i) + q.prob(i) > T::zero() && p.prob(i) >= q.prob(i))
        .collect();
    if total(&nonneg) >= T::one() {
        return Ok(sweep(p, q));
    }
    // Work with the roles exchanged, then flip every label.
    let swapped = sweep(q, p);
    let mut in_swapped = vec![false; k];
    for &i in swapped.hard_set.iter().chain(&swapped.boundary_set) {
        in_swapped[i] = true;
    }
    let hard_set = (0..k).filter(|&i| !in_swapped[i]).collect();
    Ok(BalancedClassifier {
        hard_set,
        boundary_set: swapped.boundary_set,
        boundary_prob: T::one() - swapped.boundary_prob,
    })
}

/// Sweep assuming `(P+Q)(E_0) ≥ 1`.
fn sweep<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> BalancedClassifier<T> {
    let mut bins: Vec<(T, usize)> = (0..p.len())
        .filter_map(|i| {
            let s = p.prob(i) + q.prob(i);
            if s > T::zero() {
                let r = (p.prob(i) - q.prob(i)) / s;
                (r >= T::zero()).then_some((r, i))
            } else {
                None
            }
        })
        .collect();
    bins.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite ratios"));
    // Walk distinct ratio values from the top; t* is the first value whose
    // upper set reaches total mass 1.
    let mut cum = NeumaierSum::<T>::default();
    let mut start = 0;
    while start < bins.len() {
        let v = bins[start].0;
        let mut end = start;
        let mut level = NeumaierSum::<T>::default();
        while end < bins.len() && bins[end].0 == v {
            let i = bins[end].1;
            level.add(p.prob(i) + q.prob(i));
            end += 1;
        }
        let above = cum.value();
        if above + level.value() >= T::one() || end == bins.len() {
            let hard_set = sorted(bins[..start].iter().map(|b| b.1));
            let boundary_set = sorted(bins[start..end].iter().map(|b| b.1));
            let r = ((T::one() - above) / level.value()).min(T::one()).max(T::zero());
            return BalancedClassifier {
                hard_set,
                boundary_set,
                boundary_prob: r,
            };
        }
        cum.add(level.value());
        start = end;
    }
    // Only reachable when p and q are both zero everywhere, which a pmf rules out.
    BalancedClassifier {
        hard_set: Vec::new(),
        boundary_set: Vec::new(),
        boundary_prob: T::zero(),
    }
}

fn sorted(it: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = it.collect();
    v.sort_unstable();
    v
}

/// `½·TV` lower bound helper for balanced-classifier checks.
pub fn half_tv<T: Real>(p: &DiscretePmf<T>, q: &DiscretePmf<T>) -> Result<T> {
    Ok(tv_distance(p, q)? * T::of(0.5))
}

/// Exact rejection and acceptance probabilities of `|Ā − B̄| > threshold` for
/// `A ~ Bin(n, p_mass)/n`, `B ~ Bin(n, q_mass)/n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactErrors {
    pub reject: f64,
    pub accept: f64,
}

/// Largest test size accepted by [`exact_cat_error`].
pub const EXACT_ENUMERATION_MAX_N: usize = 40;

pub fn exact_cat_error(p_mass: f64, q_mass: f64, n: usize, threshold: f64) -> Result<ExactErrors> {
    if n == 0 || n > EXACT_ENUMERATION_MAX_N {
        return Err(CatError::invalid(format!(
            "n must lie in 1..={EXACT_ENUMERATION_MAX_N}, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p_mass) || !(0.0..=1.0).contains(&q_mass) {
        return Err(CatError::invalid("masses must lie in [0, 1]"));
    }
    let fa = binomial_pmf(n, p_mass);
    let fb = binomial_pmf(n, q_mass);
    let nf = n as f64;
    let mut reject = NeumaierSum::<f64>::default();
    let mut accept = NeumaierSum::<f64>::default();
    for (a, pa) in fa.iter().enumerate() {
        for (b, pb) in fb.iter().enumerate() {
            let stat = a as f64 / nf - b as f64 / nf;
            if stat.abs() > threshold {
                reject.add(pa * pb);
            } else {
                accept.add(pa * pb);
            }
        }
    }
    Ok(ExactErrors {
        reject: reject.value(),
        accept: accept.value(),
    })
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut c = 1.0f64;
    (0..=n)
        .map(|a| {
            if a > 0 {
                c = c * (n - a + 1) as f64 / a as f64;
            }
            c * p.powi(a as i32) * (1.0 - p).powi((n - a) as i32)
        })
        .collect()
}

/// `Φ((w·θ + b)/‖w‖)`: the halfspace mass computed from the linear form alone.
pub fn halfspace_mass_linear<T: Real>(theta: &GaussianMean<T>, hs: &GaussianHalfspace<T>) -> T {
    if hs.is_degenerate() {
        return T::one();
    }
    let w = hs.weights();
    let dot = compensated_sum(w.iter().enumerate().map(|(j, wj)| *wj * theta.coeff(j)));
    let nrm = compensated_sum(w.iter().map(|v| *v * *v)).sqrt();
    normal_cdf((dot + hs.offset()) / nrm)
}
