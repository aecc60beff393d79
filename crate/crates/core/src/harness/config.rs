use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::complexity::SearchConfig;
use crate::engine::{Constants, DiscreteRoute, DistClass, Problem, SplitPolicy, TestConfig};
use crate::error::{CatError, Result};

/// Instance family drawn fresh (random signs) in every trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// Uniform against its paired perturbation; alphabet `k`.
    Paninski,
    /// The strict-comparison counterexample on `k` symbols (`k` divisible by 3).
    Negsep,
    /// `head` bins carrying `head_mass`, perturbed tail.
    HeadTail { head: usize, head_mass: f64 },
    /// Zero mean against a signed signal on the first `⌊c2 ε^{−1/s}⌋` coordinates.
    Sobolev {
        #[serde(default = "default_sobolev_c1")]
        c1: f64,
        #[serde(default = "default_sobolev_c2")]
        c2: f64,
        #[serde(default = "one")]
        size_bound: f64,
    },
    /// Uniform density on [0, 1] against `bumps` signed bumps.
    Bumps { bumps: usize },
}

fn default_sobolev_c1() -> f64 {
    4.1
}

fn default_sobolev_c2() -> f64 {
    0.4
}

fn one() -> f64 {
    1.0
}

fn default_threshold_const() -> f64 {
    TestConfig::DEFAULT_THRESHOLD_CONST
}

fn default_route() -> DiscreteRoute {
    DiscreteRoute::Auto
}

fn default_split() -> SplitPolicy {
    SplitPolicy::Contiguous
}

/// A grid of cells and the trial budget per cell.
///
/// `n` and `m` are per-half sizes: every pipeline input holds `2n` (or `2m`) observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<Problem>,
    pub classes: Vec<DistClass>,
    pub family: Family,
    /// Alphabet sizes; ignored by the Gaussian and smooth families.
    #[serde(default)]
    pub k: Vec<usize>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Z-sample sizes, LFHT only.
    #[serde(default)]
    pub m: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_threshold_const")]
    pub threshold_const: f64,
    #[serde(default)]
    pub tau_bar: Option<f64>,
    #[serde(default = "default_route")]
    pub route: DiscreteRoute,
    #[serde(default = "default_split")]
    pub split: SplitPolicy,
    #[serde(default)]
    pub constants: Constants,
    /// Present for sample-complexity runs, which search over `n` instead of using the grid.
    #[serde(default)]
    pub search: Option<SearchConfig>,
}

/// One grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub problem: Problem,
    pub class: DistClass,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub n: usize,
    pub m: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CatError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn needs_k(&self) -> bool {
        matches!(self.family, Family::Paninski | Family::Negsep | Family::HeadTail { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CatError::invalid("trials must be at least 1"));
        }
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(CatError::invalid(format!("grid `{name}` is empty")))
            } else {
                Ok(())
            }
        };
        empty("problems", self.problems.len())?;
        empty("classes", self.classes.len())?;
        empty("eps", self.eps.len())?;
        empty("delta", self.delta.len())?;
        if self.search.is_none() {
            empty("n", self.n.len())?;
        }
        if self.needs_k() {
            empty("k", self.k.len())?;
        }
        if self.problems.contains(&Problem::Lfht) {
            empty("m", self.m.len())?;
        }
        for class in &self.classes {
            let ok = match self.family {
                Family::Paninski | Family::Negsep | Family::HeadTail { .. } => {
                    matches!(class, DistClass::Db | DistClass::D)
                }
                Family::Sobolev { .. } => *class == DistClass::Gauss,
                Family::Bumps { .. } => *class == DistClass::Holder,
            };
            if !ok {
                return Err(CatError::invalid(format!(
                    "class {class} does not fit the chosen instance family"
                )));
            }
        }
        if self.n.contains(&0) || self.m.contains(&0) {
            return Err(CatError::invalid("sample sizes must be positive"));
        }
        if let Some(s) = &self.search {
            s.validate()?;
        }
        for cell in self.cells() {
            self.test_config(&cell).validate()?;
        }
        Ok(())
    }

    /// Cartesian product of the grids in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let ks = if self.needs_k() { self.k.clone() } else { vec![0] };
        let ns = if self.n.is_empty() { vec![0] } else { self.n.clone() };
        let mut out = Vec::new();
        for &problem in &self.problems {
            let ms: Vec<Option<usize>> = if problem == Problem::Lfht {
                self.m.iter().map(|&m| Some(m)).collect()
            } else {
                vec![None]
            };
            for &class in &self.classes {
                for &k in &ks {
                    for &eps in &self.eps {
                        for &delta in &self.delta {
                            for &n in &ns {
                                for &m in &ms {
                                    out.push(Cell { problem, class, k, eps, delta, n, m });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn test_config(&self, cell: &Cell) -> TestConfig {
        let mut t = TestConfig::new(cell.problem, cell.class, cell.eps, cell.delta);
        t.threshold_const = self.threshold_const;
        t.tau_bar = self.tau_bar;
        t.route = self.route;
        t.split = self.split;
        t.constants = self.constants;
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
problems = ["ts", "lfht"]
classes = ["db"]
k = [64, 256]
eps = [0.25]
delta = [0.1]
n = [100]
m = [10, 20]
trials = 5
seed = 7

[family]
kind = "paninski"

[constants]
c1 = 10.0
"#;

    #[test]
    fn parses_and_expands() {
        let c = ExperimentConfig::from_toml(TEXT).unwrap();
        c.validate().unwrap();
        assert_eq!(c.constants.c1, 10.0);
        assert_eq!(c.constants.c0, 0.1);
        assert_eq!(c.threshold_const, 8.0);
        // ts: 2 k values; lfht: 2 k × 2 m.
        assert_eq!(c.cells().len(), 6);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::from_toml(TEXT).unwrap();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_toml(TEXT).unwrap();
        c.classes = vec![DistClass::Gauss];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_toml(TEXT).unwrap();
        c.m.clear();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_toml("problems = 3").is_err());
        assert!(ExperimentConfig::from_toml(&format!("{TEXT}\nbogus = 1")).is_err());
    }
}
