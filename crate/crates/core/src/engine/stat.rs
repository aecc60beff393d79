use crate::error::{CatError, Result};
use crate::real::Real;

/// Fraction of `a` inside the set.
pub fn fraction_in<I: Copy>(in_set: impl Fn(I) -> bool, a: &[I]) -> Result<f64> {
    if a.is_empty() {
        return Err(CatError::invalid("empty dataset"));
    }
    let hits = a.iter().filter(|v| in_set(**v)).count();
    Ok(hits as f64 / a.len() as f64)
}

/// `(1/|A|)Σ 1{A_i ∈ S} − (1/|B|)Σ 1{B_j ∈ S}`.
pub fn cat_statistic<I: Copy>(in_set: impl Fn(I) -> bool, a: &[I], b: &[I]) -> Result<f64> {
    Ok(fraction_in(&in_set, a)? - fraction_in(&in_set, b)?)
}

/// `√(c·τ̄·ln(1/δ)/n) + c·ln(1/δ)/n`.
pub fn cat_threshold<T: Real>(tau_bar: T, n: usize, delta: T, c: T) -> T {
    let n = T::of_usize(n.max(1));
    let l = (T::one() / delta).ln();
    (c * tau_bar * l / n).sqrt() + c * l / n
}
