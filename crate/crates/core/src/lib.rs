//! Classifier-accuracy tests for goodness-of-fit, two-sample and likelihood-free hypothesis
//! testing over discrete, smooth-density and Gaussian-sequence models.

// Argument checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binning;
pub mod dist;
pub mod engine;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod real;
pub mod sep_discrete;
pub mod sep_gaussian;
pub mod special;

pub use error::{CatError, Result};
pub use real::Real;

pub type Pmf = dist::DiscretePmf<f64>;
pub type Pmf32 = dist::DiscretePmf<f32>;
pub type Mean = dist::GaussianMean<f64>;
pub type Mean32 = dist::GaussianMean<f32>;
pub type Matrix = dist::SampleMatrix<f64>;
