//! Special functions: standard normal cdf, log-gamma, Poisson pmf.
//!
//! Evaluation is carried out in `f64` (via `libm`) and cast back to the caller's scalar.

use crate::real::Real;

/// Standard normal cdf Φ(x), via the complementary error function.
pub fn normal_cdf<T: Real>(x: T) -> T {
    T::of(normal_cdf_f64(x.as_f64()))
}

pub(crate) fn normal_cdf_f64(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln P(Poi(rate) = j). Returns `-inf` for impossible outcomes.
///
/// Uses the saddle-point form `−stirlerr(j) − bd0(j, rate) − ½ln(2πj)`, which keeps full
/// relative accuracy at large rates where `j ln λ − λ − lnΓ(j+1)` cancels badly.
pub fn ln_poisson_pmf(rate: f64, j: u64) -> f64 {
    if rate == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if j == 0 {
        return -rate;
    }
    let x = j as f64;
    -stirlerr(x) - bd0(x, rate) - 0.5 * (2.0 * std::f64::consts::PI * x).ln()
}

/// `lnΓ(n+1) − (n+½)ln n + n − ½ln(2π)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m − x`, evaluated by series near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for i in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * i + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// P(Poi(rate) = j).
pub fn poisson_pmf(rate: f64, j: u64) -> f64 {
    ln_poisson_pmf(rate, j).exp()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values computed with 40-digit arithmetic.
    const PHI: [(f64, f64); 11] = [
        (-8.0, 6.2209605742717841235e-16),
        (-5.0, 2.8665157187919391167e-7),
        (-2.5, 0.006209665325776135167),
        (-1.0, 0.15865525393145705141),
        (-0.3, 0.38208857781104736693),
        (0.0, 0.5),
        (0.3, 0.61791142218895263307),
        (1.0, 0.84134474606854294859),
        (2.5, 0.99379033467422386483),
        (5.0, 0.99999971334842812081),
        (8.0, 0.9999999999999993779),
    ];

    #[test]
    fn normal_cdf_relative_error() {
        for &(x, want) in &PHI {
            let got: f64 = normal_cdf(x);
            assert!(((got - want) / want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn normal_cdf_f32() {
        let got: f32 = normal_cdf(1.0f32);
        assert!((got - 0.841_344_7).abs() < 1e-6);
    }

    #[test]
    fn ln_gamma_values() {
        assert!((ln_gamma(0.5) - 0.57236494292470008707).abs() < 1e-14);
        assert!((ln_gamma(1e6) - 12815504.569147611660).abs() / 12815504.57 < 1e-14);
    }

    #[test]
    fn poisson_pmf_small() {
        assert_eq!(poisson_pmf(0.0, 0), 1.0);
        assert_eq!(poisson_pmf(0.0, 3), 0.0);
        assert!((poisson_pmf(2.0, 0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((poisson_pmf(3.0, 2) - 4.5 * (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn ln_poisson_pmf_reference_values() {
        // Computed with 40-digit arithmetic.
        let cases = [
            (1e6, 1_000_000u64, -7.826693895520143127165),
            (1e6, 999_000, -8.326360395486801467659),
            (1e6, 1_003_000, -12.32369838763503816876),
            (3.5, 7, -3.255820581597838330349),
            (50.0, 20, -14.09515635219056385728),
            (0.01, 3, -15.61727002719232904268),
        ];
        for (rate, j, want) in cases {
            let got = ln_poisson_pmf(rate, j);
            assert!(((got - want) / want).abs() < 1e-13, "rate {rate}, j {j}: {got}");
        }
    }

    #[test]
    fn poisson_pmf_large_rate_no_underflow() {
        let lp = ln_poisson_pmf(1e6, 1_000_000);
        // Stirling: -0.5 ln(2π·1e6)
        let want = -0.5 * (2.0 * std::f64::consts::PI * 1e6).ln();
        assert!((lp - want).abs() < 1e-6);
    }
}
