//! Regular-grid binning of points in `[0,1]^d`, and a family of smooth bump densities on
//! `[0,1]` for experiments.
//!
//! Cells are numbered with the first axis varying fastest: the cell of `x` is
//! `Σ_a ⌊x_a·r⌋·r^a`, with `⌊1·r⌋` clamped to `r − 1`.

use std::f64::consts::PI;

use rand::Rng;

use crate::dist::{CountVector, DiscretePmf, RngState, SampleMatrix};
use crate::error::{CatError, Result};
use crate::real::{robust_ceil, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    r: usize,
    d: usize,
    total_cells: usize,
}

impl GridSpec {
    pub fn new(r: usize, d: usize) -> Result<Self> {
        if r == 0 || d == 0 {
            return Err(CatError::invalid("grid needs r ≥ 1 and d ≥ 1"));
        }
        let total_cells = u32::try_from(d)
            .ok()
            .and_then(|dd| r.checked_pow(dd))
            .ok_or_else(|| {
                CatError::invalid(format!("r^d = {r}^{d} cells exceeds the addressable budget"))
            })?;
        Ok(GridSpec { r, d, total_cells })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn total_cells(&self) -> usize {
        self.total_cells
    }

    /// Cell index of one point; `None` if a coordinate leaves `[0,1]`.
    pub fn cell_of<T: Real>(&self, x: &[T]) -> Option<usize> {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &v in x.iter().take(self.d) {
            let v = v.as_f64();
            if !(0.0..=1.0).contains(&v) {
                return None;
            }
            let c = ((v * self.r as f64).floor() as usize).min(self.r - 1);
            idx += c * stride;
            stride *= self.r;
        }
        Some(idx)
    }
}

/// `r = max(1, ⌈c·ε^{−1/β}⌉)` cells per axis.
pub fn choose_resolution(eps: f64, beta: f64, c: f64, d: usize) -> Result<GridSpec> {
    if !(eps > 0.0 && eps < 1.0) || !(beta > 0.0) || !(c > 0.0) {
        return Err(CatError::invalid("need 0 < eps < 1, beta > 0, c > 0"));
    }
    let raw = robust_ceil(c * eps.powf(-1.0 / beta));
    if !raw.is_finite() || raw > usize::MAX as f64 {
        return Err(CatError::invalid(format!("resolution {raw} exceeds the addressable budget")));
    }
    GridSpec::new((raw as usize).max(1), d)
}

/// Cell counts of the rows of `points`.
pub fn grid_bin<T: Real>(points: &SampleMatrix<T>, grid: &GridSpec) -> Result<CountVector> {
    if points.cols() != grid.d {
        return Err(CatError::invalid(format!(
            "points have {} columns, grid has d = {}",
            points.cols(),
            grid.d
        )));
    }
    let mut counts = vec![0u64; grid.total_cells];
    for (row, x) in points.iter_rows().enumerate() {
        let c = grid.cell_of(x).ok_or_else(|| {
            CatError::invalid(format!("point {row} has a coordinate outside [0, 1]"))
        })?;
        counts[c] += 1;
    }
    Ok(CountVector::new(counts, false))
}

/// Cell symbols of the rows of `points`.
pub fn grid_symbols<T: Real>(points: &SampleMatrix<T>, grid: &GridSpec) -> Result<Vec<usize>> {
    if points.cols() != grid.d {
        return Err(CatError::invalid("dimension mismatch between points and grid"));
    }
    points
        .iter_rows()
        .enumerate()
        .map(|(row, x)| {
            grid.cell_of(x).ok_or_else(|| {
                CatError::invalid(format!("point {row} has a coordinate outside [0, 1]"))
            })
        })
        .collect()
}

/// Sums fine-grid counts into the grid with `factor` times fewer cells per axis.
pub fn coarsen(fine: &CountVector, fine_grid: &GridSpec, factor: usize) -> Result<CountVector> {
    if factor == 0 || !fine_grid.r.is_multiple_of(factor) || fine.k() != fine_grid.total_cells {
        return Err(CatError::invalid("factor must divide r and counts must match the grid"));
    }
    let coarse = GridSpec::new(fine_grid.r / factor, fine_grid.d)?;
    let mut out = vec![0u64; coarse.total_cells];
    for (idx, &c) in fine.counts().iter().enumerate() {
        let mut rem = idx;
        let mut cidx = 0;
        let mut stride = 1;
        for _ in 0..fine_grid.d {
            cidx += (rem % fine_grid.r) / factor * stride;
            rem /= fine_grid.r;
            stride *= coarse.r;
        }
        out[cidx] += c;
    }
    Ok(CountVector::new(out, fine.is_poissonized()))
}

/// Mean-zero bump `ψ(u) = sin(2πu) − ½ sin(4πu)` on `[0,1]`.
fn psi(u: f64) -> f64 {
    (2.0 * PI * u).sin() - 0.5 * (4.0 * PI * u).sin()
}

/// `Ψ(u) = ∫_0^u ψ`.
fn psi_integral(u: f64) -> f64 {
    (1.0 - (2.0 * PI * u).cos()) / (2.0 * PI) - (1.0 - (4.0 * PI * u).cos()) / (8.0 * PI)
}

/// `f(x) = 1 + a·η_b·ψ(r x − b)` on cell `b` of `r` equal cells, `a = π ε`, so that
/// TV(f, uniform) = ε. Requires `ε ≤ 0.245` for non-negativity.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpDensity {
    signs: Vec<i8>,
    amplitude: f64,
}

impl BumpDensity {
    pub fn new(eps: f64, signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(CatError::invalid("need at least one sign in {-1, +1}"));
        }
        if !(0.0..=0.245).contains(&eps) {
            return Err(CatError::invalid(format!("eps must lie in [0, 0.245], got {eps}")));
        }
        Ok(BumpDensity {
            signs,
            amplitude: PI * eps,
        })
    }

    pub fn bumps(&self) -> usize {
        self.signs.len()
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let r = self.bumps();
        let b = ((x * r as f64).floor() as usize).min(r - 1);
        (b, x * r as f64 - b as f64)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let (b, u) = self.locate(x);
        1.0 + self.amplitude * self.signs[b] as f64 * psi(u)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let (b, u) = self.locate(x);
        let r = self.bumps() as f64;
        (b as f64 + u + self.amplitude * self.signs[b] as f64 * psi_integral(u)) / r
    }

    /// Exact masses of the `r` cells of a 1-d grid.
    pub fn cell_masses(&self, r: usize) -> Result<DiscretePmf<f64>> {
        let w = (0..r)
            .map(|i| self.cdf((i + 1) as f64 / r as f64) - self.cdf(i as f64 / r as f64))
            .map(|m| m.max(0.0))
            .collect();
        DiscretePmf::from_weights(w)
    }

    /// `n` draws by inversion of the closed-form cdf, as an `n × 1` matrix.
    pub fn sample(&self, n: usize, rng: RngState) -> SampleMatrix<f64> {
        let mut g = rng.rng();
        let r = self.bumps() as f64;
        let data = (0..n)
            .map(|_| {
                let v: f64 = g.random::<f64>() * r;
                let b = (v.floor() as usize).min(self.bumps() - 1);
                let target = v - b as f64;
                let eta = self.amplitude * self.signs[b] as f64;
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if mid + eta * psi_integral(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                ((b as f64 + 0.5 * (lo + hi)) / r).clamp(0.0, 1.0)
            })
            .collect();
        SampleMatrix::new(n, 1, data).expect("n × 1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_uniform, tv_distance};

    #[test]
    fn resolution_examples() {
        assert_eq!(choose_resolution(0.01, 1.0, 1.0, 1).unwrap().r(), 100);
        assert_eq!(choose_resolution(0.5, 2.0, 1.0, 1).unwrap().r(), 2);
        assert_eq!(choose_resolution(0.5, 1e300, 1.0, 1).unwrap().r(), 1);
        assert!(choose_resolution(1e-6, 1.0, 1.0, 8).is_err());
        assert_eq!(choose_resolution(0.1, 1.0, 1.0, 3).unwrap().total_cells(), 1000);
    }

    #[test]
    fn binning_examples() {
        let g = GridSpec::new(4, 1).unwrap();
        let pts = SampleMatrix::new(4, 1, vec![0.1, 0.6, 0.61, 0.99]).unwrap();
        assert_eq!(grid_bin(&pts, &g).unwrap().counts(), &[1, 0, 2, 1]);
        let edge = SampleMatrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(grid_bin(&edge, &g).unwrap().counts(), &[1, 0, 0, 1]);
        let g2 = GridSpec::new(2, 2).unwrap();
        assert_eq!(g2.cell_of(&[0.7, 0.2]), Some(1));
        assert_eq!(g2.cell_of(&[0.2, 0.7]), Some(2));
        let bad = SampleMatrix::new(2, 1, vec![0.5, 1.5]).unwrap();
        let err = grid_bin(&bad, &g).unwrap_err();
        assert!(err.to_string().contains("point 1"));
    }

    #[test]
    fn coarsen_2d() {
        let fine = GridSpec::new(4, 2).unwrap();
        let pts = SampleMatrix::from_rows(&[
            vec![0.1, 0.1],
            vec![0.3, 0.9],
            vec![0.8, 0.4],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let f = grid_bin(&pts, &fine).unwrap();
        let c = coarsen(&f, &fine, 2).unwrap();
        let direct = grid_bin(&pts, &GridSpec::new(2, 2).unwrap()).unwrap();
        assert_eq!(c, direct);
    }

    #[test]
    fn bump_density_properties() {
        let f = BumpDensity::new(0.2, vec![1, -1, -1, 1, 1]).unwrap();
        assert!((f.cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((f.cdf(0.4) - 0.4).abs() < 1e-12);
        // Riemann check of the cdf.
        let n = 200_000;
        let integral: f64 = (0..n).map(|i| f.pdf((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((integral - 1.0).abs() < 1e-9);
        let l1: f64 = (0..n).map(|i| (f.pdf((i as f64 + 0.5) / n as f64) - 1.0).abs()).sum::<f64>() / n as f64;
        assert!((l1 / 2.0 - 0.2).abs() < 1e-6);
        assert!(BumpDensity::new(0.3, vec![1]).is_err());
    }

    #[test]
    fn even_refinement_keeps_tv() {
        let f = BumpDensity::new(0.15, vec![1, -1, 1, 1, -1, -1, 1, -1]).unwrap();
        for ratio in [2, 4, 6] {
            let p = f.cell_masses(8 * ratio).unwrap();
            let u = make_uniform::<f64>(8 * ratio).unwrap();
            assert!((tv_distance(&p, &u).unwrap() - 0.15).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_matches_cdf() {
        let f = BumpDensity::new(0.2, vec![1, -1, 1]).unwrap();
        let n = 200_000;
        let xs = f.sample(n, RngState::new(5));
        let g = GridSpec::new(12, 1).unwrap();
        let counts = grid_bin(&xs, &g).unwrap();
        let masses = f.cell_masses(12).unwrap();
        for i in 0..12 {
            let p = masses.prob(i);
            let got = counts.get(i) as f64 / n as f64;
            assert!((got - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
    }
}
