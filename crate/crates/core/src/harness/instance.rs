use super::config::{Cell, Family};
use crate::binning::{choose_resolution, BumpDensity};
use crate::dist::{
    make_head_tail_pair, make_negsep_pair, make_paninski_pair, make_sobolev_signal, make_uniform,
    random_signs, sample_gaussian_sequence, sample_iid_symbols, sobolev_support, DiscretePmf,
    GaussianMean, RngState,
};
use crate::engine::{LearnedSet, NullModel, Sample, TestConfig};
use crate::error::Result;
use crate::oracle::{exact_sep, exact_tau};
use crate::sep_gaussian::{halfspace_mass, truncation_level};

/// A base (null) distribution and an alternative, with samplers and exact set masses.
#[derive(Clone, Debug)]
pub enum Instance {
    Discrete {
        base: DiscretePmf<f64>,
        alt: DiscretePmf<f64>,
    },
    Gaussian {
        base: GaussianMean<f64>,
        alt: GaussianMean<f64>,
        len: usize,
    },
    Smooth {
        base: BumpDensity,
        alt: BumpDensity,
        /// Cell masses on the analysis grid.
        base_cells: DiscretePmf<f64>,
        alt_cells: DiscretePmf<f64>,
    },
}

impl Instance {
    /// Draws a fresh instance for one trial.
    pub fn build(family: &Family, cell: &Cell, cfg: &TestConfig, rng: RngState) -> Result<Self> {
        Ok(match family {
            Family::Paninski => {
                let signs = random_signs(cell.k / 2, rng);
                let (base, alt) = make_paninski_pair(cell.k, cell.eps, &signs)?;
                Instance::Discrete { base, alt }
            }
            Family::Negsep => {
                let (base, alt) = make_negsep_pair(cell.k / 3)?;
                Instance::Discrete { base, alt }
            }
            Family::HeadTail { head, head_mass } => {
                let signs = random_signs((cell.k - head.min(&cell.k)) / 2, rng);
                let (alt, base) = make_head_tail_pair(cell.k, *head, *head_mass, cell.eps, &signs)?;
                Instance::Discrete { base, alt }
            }
            Family::Sobolev { c1, c2, size_bound } => {
                let s = cfg.constants.smoothness;
                let support = sobolev_support(s, cell.eps, *c2);
                let alt = make_sobolev_signal(s, *size_bound, cell.eps, &random_signs(support, rng), *c1, *c2)?;
                let len = truncation_level(cell.eps, s, cfg.constants.level_const).max(support).max(1);
                Instance::Gaussian {
                    base: GaussianMean::zero(1, s, *size_bound)?,
                    alt,
                    len,
                }
            }
            Family::Bumps { bumps } => {
                let grid = choose_resolution(
                    cell.eps,
                    cfg.constants.smoothness,
                    cfg.constants.res_const,
                    cfg.constants.dim,
                )?;
                let alt = BumpDensity::new(cell.eps, random_signs(*bumps, rng))?;
                let base = BumpDensity::new(0.0, vec![1])?;
                Instance::Smooth {
                    base_cells: make_uniform(grid.total_cells())?,
                    alt_cells: alt.cell_masses(grid.r())?,
                    base,
                    alt,
                }
            }
        })
    }

    /// `count` draws from the base (`from_alt = false`) or the alternative.
    pub fn sample(&self, from_alt: bool, count: usize, rng: RngState) -> Result<Sample<f64>> {
        Ok(match self {
            Instance::Discrete { base, alt } => {
                let p = if from_alt { alt } else { base };
                Sample::Symbols {
                    k: p.len(),
                    data: sample_iid_symbols(p, count, rng),
                }
            }
            Instance::Gaussian { base, alt, len } => {
                let th = if from_alt { alt } else { base };
                Sample::Rows(sample_gaussian_sequence(th, *len, count, rng)?)
            }
            Instance::Smooth { base, alt, .. } => {
                let d = if from_alt { alt } else { base };
                Sample::Rows(d.sample(count, rng))
            }
        })
    }

    pub fn null_model(&self) -> NullModel<f64> {
        match self {
            Instance::Discrete { base, .. } => NullModel::Discrete(base.clone()),
            Instance::Gaussian { base, .. } => NullModel::Gaussian(base.clone()),
            Instance::Smooth { .. } => NullModel::UniformCube,
        }
    }

    /// `(P_first(S) − P_second(S), τ(S))` under the exact distributions, with the alternative
    /// first when `alt_first`.
    pub fn set_quality(&self, set: &LearnedSet<f64>, alt_first: bool) -> Result<(f64, f64)> {
        match (self, set) {
            (_, LearnedSet::Nothing) => Ok((0.0, 0.0)),
            (Instance::Discrete { base, alt }, LearnedSet::Discrete(s))
            | (
                Instance::Smooth {
                    base_cells: base,
                    alt_cells: alt,
                    ..
                },
                LearnedSet::Discrete(s),
            ) => {
                let (p, q) = if alt_first { (alt, base) } else { (base, alt) };
                Ok((exact_sep(s, p, q)?, exact_tau(s, p, q)?))
            }
            (Instance::Gaussian { base, alt, .. }, LearnedSet::Halfspace(h)) => {
                let (p, q) = if alt_first { (alt, base) } else { (base, alt) };
                let (mp, mq) = (halfspace_mass(p, h), halfspace_mass(q, h));
                Ok((mp - mq, (mp * (1.0 - mp)).min(mq * (1.0 - mq))))
            }
            _ => Err(crate::CatError::invalid("learned set does not match the instance")),
        }
    }

    /// Alphabet size reported for the cell: `k`, grid cells, or observed sequence length.
    pub fn reported_k(&self) -> usize {
        match self {
            Instance::Discrete { base, .. } => base.len(),
            Instance::Gaussian { len, .. } => *len,
            Instance::Smooth { base_cells, .. } => base_cells.len(),
        }
    }
}
