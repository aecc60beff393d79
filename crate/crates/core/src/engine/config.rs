use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = CatError;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    _ => Err(CatError::invalid(format!(
                        concat!("unknown ", stringify!($name), " {:?}"), s
                    ))),
                }
            }
        }
    };
}

/// Which hypothesis-testing problem is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Gof,
    Ts,
    Lfht,
}
text_enum!(Problem { Gof => "gof", Ts => "ts", Lfht => "lfht" });

/// Distribution class, which fixes how the separating set is learned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistClass {
    /// Discrete with `max p ≤ C/k`.
    Db,
    /// Arbitrary discrete.
    D,
    /// Smooth densities on `[0,1]^d`, binned.
    Holder,
    /// Gaussian sequence model.
    Gauss,
}
text_enum!(DistClass { Db => "db", D => "d", Holder => "holder", Gauss => "gauss" });

/// Discrete set construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteRoute {
    /// Chosen from the class, problem and sample sizes.
    Auto,
    Half,
    BetterOfTwo,
    BestOfLogK,
}
text_enum!(DiscreteRoute {
    Auto => "auto",
    Half => "half",
    BetterOfTwo => "better-of-two",
    BestOfLogK => "best-of-logk",
});

/// How a raw sample is cut into training and test halves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPolicy {
    /// First half trains, second half tests.
    Contiguous,
    /// Even positions train, odd positions test.
    Interleaved,
}
text_enum!(SplitPolicy { Contiguous => "contiguous", Interleaved => "interleaved" });

/// Constants that the theory leaves unspecified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// Bound `C` in `max p ≤ C/k`.
    pub c_db: f64,
    /// Localization constant in `t = k ∧ c0·m/ln(1/δ)`.
    pub c0: f64,
    /// Acceptance constant of the bucketed selector.
    pub c1: f64,
    /// Level constant in `J = ⌊c·ε^{−1/s}⌋`.
    pub level_const: f64,
    /// Resolution constant in `r = ⌈c·ε^{−1/β}⌉`.
    pub res_const: f64,
    /// Smoothness `s` (Gaussian) or `β` (Hölder).
    pub smoothness: f64,
    /// Dimension of binned points.
    pub dim: usize,
}

impl Constants {
    /// Acceptance constant of the bucketed selector, fitted so that equal distributions
    /// rarely pass while ε-far head-tail pairs at the GoF budget do.
    pub const DEFAULT_C1: f64 = 16.0;
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_db: 2.0,
            c0: 0.1,
            c1: Constants::DEFAULT_C1,
            level_const: crate::sep_gaussian::DEFAULT_LEVEL_CONST,
            res_const: 2.0,
            smoothness: 1.0,
            dim: 1,
        }
    }
}

/// Everything a pipeline needs besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub problem: Problem,
    pub class: DistClass,
    pub eps: f64,
    pub delta: f64,
    /// `c` in the threshold `√(c τ̄ ln(1/δ)/n) + c ln(1/δ)/n`.
    pub threshold_const: f64,
    /// Overrides the class-derived bound on τ(S).
    pub tau_bar: Option<f64>,
    pub route: DiscreteRoute,
    pub split: SplitPolicy,
    pub constants: Constants,
}

impl TestConfig {
    pub const DEFAULT_THRESHOLD_CONST: f64 = 8.0;

    pub fn new(problem: Problem, class: DistClass, eps: f64, delta: f64) -> Self {
        TestConfig {
            problem,
            class,
            eps,
            delta,
            threshold_const: Self::DEFAULT_THRESHOLD_CONST,
            tau_bar: None,
            route: DiscreteRoute::Auto,
            split: SplitPolicy::Contiguous,
            constants: Constants::default(),
        }
    }

    /// `ln(1/δ)`.
    pub fn log_inv_delta(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(CatError::invalid(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(CatError::invalid(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        if !(self.threshold_const > 0.0) {
            return Err(CatError::invalid("threshold constant must be positive"));
        }
        if let Some(t) = self.tau_bar {
            if !(0.0..=0.25).contains(&t) {
                return Err(CatError::invalid("tau_bar must lie in [0, 1/4]"));
            }
        }
        let c = &self.constants;
        if !(c.c_db > 0.0 && c.c0 > 0.0 && c.c1 >= 0.0 && c.level_const > 0.0 && c.res_const > 0.0)
        {
            return Err(CatError::invalid("constants must be positive"));
        }
        if !(c.smoothness > 0.0) || c.dim == 0 {
            return Err(CatError::invalid("smoothness must be positive and dim ≥ 1"));
        }
        Ok(())
    }
}
