//! Sampler moment measurements. Each function returns the observed error
//! so the moment tests and the acceptance report share one implementation.
#![allow(dead_code)]

use rand::Rng;
use ssw_core::stats::dist::{beta_sample, invwishart_sample, mvn_sample, wishart_sample};
use ssw_core::stats::linalg::rel_frobenius;
use ssw_core::stats::{digamma, Cholesky, Matrix, RngState, Vector};

pub const DRAWS: usize = 100_000;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn spd(d: usize, seed: u64) -> Matrix {
    let mut rng = RngState::new(seed);
    let b = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + Matrix::identity(d, d)
}

/// Max abs coordinate of the sample mean of N(0, I₄).
pub fn mvn_mean_err() -> f64 {
    let mut rng = RngState::new(11);
    let d = 4;
    let mut acc = Vector::zeros(d);
    for _ in 0..DRAWS {
        acc += mvn_sample(&Vector::zeros(d), &Matrix::identity(d, d), &mut rng).unwrap();
    }
    (acc / DRAWS as f64).amax()
}

/// Relative Frobenius error of the sample covariance.
pub fn mvn_cov_err() -> f64 {
    let mut rng = RngState::new(12);
    let cov = spd(3, 5);
    let mean = Vector::from_vec(vec![1.0, -2.0, 0.5]);
    let mut acc = Matrix::zeros(3, 3);
    for _ in 0..DRAWS {
        let z = mvn_sample(&mean, &cov, &mut rng).unwrap() - &mean;
        acc += &z * z.transpose();
    }
    rel_frobenius(&(acc / DRAWS as f64), &cov)
}

/// E[W] = dof·S at d = 3.
pub fn wishart_mean_err() -> f64 {
    let mut rng = RngState::new(13);
    let scale = spd(3, 6);
    let dof = 7.0;
    let mut acc = Matrix::zeros(3, 3);
    for _ in 0..DRAWS {
        acc += wishart_sample(dof, &scale, &mut rng).unwrap();
    }
    rel_frobenius(&(acc / DRAWS as f64), &(&scale * dof))
}

/// E[Σ] = S/(dof − d − 1) at d = 2.
pub fn invwishart_mean_err() -> f64 {
    let mut rng = RngState::new(14);
    let scale = spd(2, 7);
    let dof = 10.0;
    let mut acc = Matrix::zeros(2, 2);
    for _ in 0..DRAWS {
        acc += invwishart_sample(dof, &scale, &mut rng).unwrap();
    }
    rel_frobenius(&(acc / DRAWS as f64), &(&scale / (dof - 2.0 - 1.0)))
}

/// E[Σ⁻¹] = dof·S⁻¹ and E ln|Σ| = ln|S| − d ln 2 − Σ_j ψ((dof+1−j)/2).
/// Returns (relative precision error, absolute log-det error).
pub fn invwishart_expectation_errs() -> (f64, f64) {
    let mut rng = RngState::new(15);
    let scale = spd(3, 8);
    let dof = 6.5;
    let mut prec = Matrix::zeros(3, 3);
    let mut ln_det = 0.0;
    for _ in 0..DRAWS {
        let s = Cholesky::new(&invwishart_sample(dof, &scale, &mut rng).unwrap()).unwrap();
        prec += s.inverse();
        ln_det += s.ln_det();
    }
    prec /= DRAWS as f64;
    ln_det /= DRAWS as f64;
    let chol = Cholesky::new(&scale).unwrap();
    let psi: f64 = (1..=3)
        .map(|j| digamma((dof + 1.0 - j as f64) / 2.0).unwrap())
        .sum();
    let expected = chol.ln_det() - 3.0 * std::f64::consts::LN_2 - psi;
    (
        rel_frobenius(&prec, &(chol.inverse() * dof)),
        (ln_det - expected).abs(),
    )
}

/// Beta(2.5, 6) mean and E ln x errors.
pub fn beta_errs() -> (f64, f64) {
    let mut rng = RngState::new(16);
    let (a, b) = (2.5, 6.0);
    let (mut mean, mut ln_mean) = (0.0, 0.0);
    for _ in 0..DRAWS {
        let x = beta_sample(a, b, &mut rng).unwrap();
        mean += x;
        ln_mean += x.ln();
    }
    mean /= DRAWS as f64;
    ln_mean /= DRAWS as f64;
    let expected = digamma(a).unwrap() - digamma(a + b).unwrap();
    ((mean - a / (a + b)).abs(), (ln_mean - expected).abs())
}

/// Kolmogorov–Smirnov distance of Beta(1,1) draws from U(0,1).
pub fn beta_uniform_ks() -> f64 {
    let mut rng = RngState::new(17);
    let mut xs: Vec<f64> = (0..DRAWS)
        .map(|_| beta_sample(1.0, 1.0, &mut rng).unwrap())
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

/// Largest digamma error over the closed-form points.
pub fn digamma_max_err() -> f64 {
    use std::f64::consts::{FRAC_PI_2, LN_2};
    let h9: f64 = (1..=9).map(|k| 1.0 / k as f64).sum();
    let cases = [
        (digamma(1.0).unwrap(), -EULER_GAMMA),
        (digamma(0.5).unwrap(), -EULER_GAMMA - 2.0 * LN_2),
        (digamma(4.7).unwrap() - digamma(3.7).unwrap(), 1.0 / 3.7),
        (digamma(10.0).unwrap(), h9 - EULER_GAMMA),
        (
            digamma(0.25).unwrap(),
            -EULER_GAMMA - FRAC_PI_2 - 3.0 * LN_2,
        ),
    ];
    cases
        .iter()
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max)
}

/// Every check as (name, observed error, tolerance).
pub fn all_checks() -> Vec<(&'static str, f64, f64)> {
    let (iw_prec, iw_ln_det) = invwishart_expectation_errs();
    let (beta_mean, beta_ln) = beta_errs();
    vec![
        ("mvn mean", mvn_mean_err(), 0.02),
        ("mvn covariance", mvn_cov_err(), 0.02),
        ("wishart mean", wishart_mean_err(), 0.05),
        ("inverse-wishart mean", invwishart_mean_err(), 0.05),
        ("inverse-wishart E[precision]", iw_prec, 0.02),
        ("inverse-wishart E ln det", iw_ln_det, 0.02),
        ("beta mean", beta_mean, 0.01),
        ("beta E ln x", beta_ln, 0.01),
        ("beta(1,1) KS", beta_uniform_ks(), 0.01),
        ("digamma closed forms", digamma_max_err(), 1e-10),
    ]
}
