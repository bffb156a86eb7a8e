use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use statrs::function::gamma::ln_gamma;

/// Digamma ψ(x) for x > 0: upward recurrence to x ≥ 6, then the asymptotic
/// series through the x⁻¹⁴ term.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "digamma({x}) requires x > 0"
        )));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(acc + x.ln() - 0.5 * inv - series)
}

/// Multivariate log-gamma `ln Γ_d(a)`.
pub fn ln_multigamma(d: usize, a: f64) -> f64 {
    let df = d as f64;
    0.25 * df * (df - 1.0) * PI.ln() + (0..d).map(|j| ln_gamma(a - 0.5 * j as f64)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-10);
        let half = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-10);
        // ψ(2) = 1 − γ
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-10);
    }

    #[test]
    fn digamma_recurrence() {
        let x = 3.7;
        let diff = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        assert!((diff - 1.0 / x).abs() < 1e-12);
    }

    #[test]
    fn digamma_large_argument() {
        // ψ(x) ≈ ln x − 1/(2x) for huge x
        let x = 1e8;
        assert!((digamma(x).unwrap() - (x.ln() - 0.5 / x)).abs() < 1e-12);
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn multigamma_reduces_to_gamma() {
        assert!((ln_multigamma(1, 3.3) - ln_gamma(3.3)).abs() < 1e-14);
        // Γ_2(a) = π^{1/2} Γ(a) Γ(a − 1/2)
        let a = 4.2;
        let expect = 0.5 * PI.ln() + ln_gamma(a) + ln_gamma(a - 0.5);
        assert!((ln_multigamma(2, a) - expect).abs() < 1e-12);
    }
}
