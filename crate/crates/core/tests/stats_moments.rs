mod common;

use common::moments::{
    beta_errs, beta_uniform_ks, digamma_max_err, invwishart_expectation_errs, invwishart_mean_err,
    mvn_cov_err, mvn_mean_err, spd, wishart_mean_err,
};
use proptest::prelude::*;
use ssw_core::stats::dist::{invwishart_sample, mvn_logpdf};
use ssw_core::stats::linalg::rel_frobenius;
use ssw_core::stats::{Cholesky, Matrix, RngState, Vector};

#[test]
fn mvn_sample_mean() {
    let err = mvn_mean_err();
    assert!(err < 0.02, "{err}");
}

#[test]
fn mvn_sample_covariance() {
    let err = mvn_cov_err();
    assert!(err < 0.02, "{err}");
}

#[test]
fn wishart_mean() {
    let err = wishart_mean_err();
    assert!(err < 0.05, "{err}");
}

#[test]
fn invwishart_mean() {
    let err = invwishart_mean_err();
    assert!(err < 0.05, "{err}");
}

#[test]
fn invwishart_expected_precision_and_log_det() {
    let (prec, ln_det) = invwishart_expectation_errs();
    assert!(prec < 0.02, "{prec}");
    assert!(ln_det < 0.02, "{ln_det}");
}

#[test]
fn beta_mean_and_log_moments() {
    let (mean, ln_mean) = beta_errs();
    assert!(mean < 0.01, "{mean}");
    assert!(ln_mean < 0.01, "{ln_mean}");
}

#[test]
fn beta_one_one_is_uniform() {
    let ks = beta_uniform_ks();
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn scalar_density_integrates_to_one() {
    let (mean, sd) = (0.7, 1.9_f64);
    let cov = Matrix::from_element(1, 1, sd * sd);
    let steps = 20_000;
    let lo = mean - 10.0 * sd;
    let dx = 20.0 * sd / steps as f64;
    let total: f64 = (0..=steps)
        .map(|k| {
            let x = Vector::from_vec(vec![lo + k as f64 * dx]);
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            w * mvn_logpdf(&x, &Vector::from_vec(vec![mean]), &cov)
                .unwrap()
                .exp()
        })
        .sum::<f64>()
        * dx;
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn digamma_closed_forms() {
    let err = digamma_max_err();
    assert!(err < 1e-10, "{err}");
}

fn conditioned_spd(d: usize, cond: f64, seed: u64) -> Matrix {
    // Q diag(λ) Qᵀ with log-spaced eigenvalues spanning `cond`.
    use rand::Rng;
    let mut rng = RngState::new(seed);
    let b = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = b.qr().q();
    let lambda = Vector::from_fn(d, |i, _| {
        if d == 1 {
            1.0
        } else {
            cond.powf(i as f64 / (d - 1) as f64)
        }
    });
    &q * Matrix::from_diagonal(&lambda) * q.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cholesky_reconstructs_up_to_cond_1e8(d in 1usize..12, log_cond in 0.0f64..8.0, seed in any::<u64>()) {
        let a = conditioned_spd(d, 10f64.powf(log_cond), seed);
        let a = ssw_core::stats::linalg::symmetrize(a);
        let chol = Cholesky::new(&a).unwrap();
        prop_assert!(rel_frobenius(&chol.reconstruct(), &a) < 1e-8);
    }

    #[test]
    fn samplers_are_pure(seed in any::<u64>()) {
        let scale = spd(3, 1);
        let a = invwishart_sample(5.0, &scale, &mut RngState::new(seed)).unwrap();
        let b = invwishart_sample(5.0, &scale, &mut RngState::new(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}
