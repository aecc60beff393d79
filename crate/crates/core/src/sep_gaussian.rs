//! Truncated likelihood-ratio halfspaces for the Gaussian sequence model.

use crate::dist::GaussianMean;
use crate::error::{CatError, Result};
use crate::real::{compensated_sum, robust_floor, Real};
use crate::special::normal_cdf;

/// Default level constant in `J = ⌊c·ε^{−1/s}⌋`, calibrated for ellipsoid size 1.
pub const DEFAULT_LEVEL_CONST: f64 = 4.0;

/// `J = max(1, ⌊c·ε^{−1/s}⌋)`.
pub fn truncation_level(eps: f64, s: f64, c: f64) -> usize {
    (robust_floor(c * eps.powf(-1.0 / s)) as usize).max(1)
}

/// `{Z: T(Z) ≥ 0}` with `T(Z) = Σ_{j<J} w_j Z_j + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHalfspace<T: Real = f64> {
    weights: Vec<T>,
    offset: T,
    center_x: Vec<T>,
    center_y: Vec<T>,
}

impl<T: Real> GaussianHalfspace<T> {
    /// Builds the halfspace directly from `(w, b)`.
    pub fn from_parts(weights: Vec<T>, offset: T) -> Result<Self> {
        if weights.is_empty() {
            return Err(CatError::invalid("halfspace needs J ≥ 1"));
        }
        // Any pair of centres with difference w/2 and the right midpoint reproduces (w, b).
        let nrm2 = compensated_sum(weights.iter().map(|w| *w * *w));
        let half: Vec<T> = weights.iter().map(|w| *w / T::of(4.0)).collect();
        let mid_scale = if nrm2 > T::zero() { -offset / nrm2 } else { T::zero() };
        let mid: Vec<T> = weights.iter().map(|w| *w * mid_scale).collect();
        let center_x = mid.iter().zip(&half).map(|(m, h)| *m + *h).collect();
        let center_y = mid.iter().zip(&half).map(|(m, h)| *m - *h).collect();
        Ok(GaussianHalfspace {
            weights,
            offset,
            center_x,
            center_y,
        })
    }

    pub fn j(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    /// True when all weights vanish; the set is then the whole space.
    pub fn is_degenerate(&self) -> bool {
        self.weights.iter().all(|w| *w == T::zero())
    }

    /// `T(z)`; coordinates past `J` are ignored.
    pub fn statistic(&self, z: &[T]) -> T {
        let dot = compensated_sum(self.weights.iter().zip(z).map(|(w, v)| *w * *v));
        dot + self.offset
    }

    pub fn contains(&self, z: &[T]) -> bool {
        self.statistic(z) >= T::zero()
    }

    /// Text form: `J`, then the weights, then `b`, one per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.j());
        for w in &self.weights {
            s.push_str(&format!("{w}\n"));
        }
        s.push_str(&format!("{}\n", self.offset));
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let vals: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let (l0, first) = *vals.first().ok_or_else(|| CatError::invalid("empty halfspace"))?;
        let j: usize = first.parse().map_err(|_| CatError::Parse {
            line: l0,
            msg: format!("bad J {first:?}"),
        })?;
        if vals.len() != j + 2 {
            return Err(CatError::invalid(format!(
                "expected {} numbers after J, found {}",
                j + 1,
                vals.len() - 1
            )));
        }
        let nums = vals[1..]
            .iter()
            .map(|(ln, v)| {
                v.parse::<f64>().map(T::of).map_err(|_| CatError::Parse {
                    line: *ln,
                    msg: format!("not a number: {v:?}"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        GaussianHalfspace::from_parts(nums[..j].to_vec(), nums[j])
    }
}

/// Halfspace with `w_j = 2(θ̂X_j − θ̂Y_j)` and `b = −Σ w_j(θ̂X_j + θ̂Y_j)/2` over the first `J`
/// coordinates.
pub fn gaussian_sep_set<T: Real>(
    theta_hat_x: &[T],
    theta_hat_y: &[T],
    j: usize,
) -> Result<GaussianHalfspace<T>> {
    if j == 0 {
        return Err(CatError::invalid("truncation level must be at least 1"));
    }
    if theta_hat_x.len() < j || theta_hat_y.len() < j {
        return Err(CatError::invalid(format!(
            "mean estimates shorter than J = {j}"
        )));
    }
    let two = T::of(2.0);
    let cx = theta_hat_x[..j].to_vec();
    let cy = theta_hat_y[..j].to_vec();
    let weights: Vec<T> = cx.iter().zip(&cy).map(|(a, b)| two * (*a - *b)).collect();
    let offset = -compensated_sum(
        weights
            .iter()
            .zip(cx.iter().zip(&cy))
            .map(|(w, (a, b))| *w * (*a + *b) / two),
    );
    Ok(GaussianHalfspace {
        weights,
        offset,
        center_x: cx,
        center_y: cy,
    })
}

/// Exact `μ_θ(S) = Φ((‖θ̂Y−θ‖² − ‖θ̂X−θ‖²)/(2‖θ̂X−θ̂Y‖))` on the first `J` coordinates.
///
/// Degenerate halfspaces contain everything and get mass 1.
pub fn halfspace_mass<T: Real>(theta: &GaussianMean<T>, hs: &GaussianHalfspace<T>) -> T {
    if hs.is_degenerate() {
        return T::one();
    }
    let j = hs.j();
    let d2 = |c: &[T]| compensated_sum((0..j).map(|i| (c[i] - theta.coeff(i)).powi(2)));
    let gap = compensated_sum((0..j).map(|i| (hs.center_x[i] - hs.center_y[i]).powi(2))).sqrt();
    normal_cdf((d2(&hs.center_y) - d2(&hs.center_x)) / (T::of(2.0) * gap))
}

/// Squared Euclidean distance of two mean sequences over the first `j` coordinates.
pub fn truncated_distance_sq<T: Real>(a: &GaussianMean<T>, b: &GaussianMean<T>, j: usize) -> T {
    compensated_sum((0..j).map(|i| (a.coeff(i) - b.coeff(i)).powi(2)))
}
