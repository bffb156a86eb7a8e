//! Distributions the attack model draws from or scores.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, StandardNormal};

use super::linalg::{symmetrize, Cholesky, Matrix, Vector};
use super::rng::RngState;
use super::special::{ln_gamma, ln_multigamma};
use crate::error::{Error, Result};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn standard_normal_vector(d: usize, rng: &mut RngState) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

pub fn mvn_sample(mean: &Vector, cov: &Matrix, rng: &mut RngState) -> Result<Vector> {
    let chol = Cholesky::new(cov)?;
    mvn_sample_chol(mean, &chol, rng)
}

/// `mean + L z` with `z ~ N(0, I)`.
pub fn mvn_sample_chol(mean: &Vector, chol: &Cholesky, rng: &mut RngState) -> Result<Vector> {
    if mean.len() != chol.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mean has {} entries, covariance is {}x{}",
            mean.len(),
            chol.dim(),
            chol.dim()
        )));
    }
    let z = standard_normal_vector(mean.len(), rng);
    Ok(mean + chol.l() * z)
}

pub fn mvn_logpdf(x: &Vector, mean: &Vector, cov: &Matrix) -> Result<f64> {
    let chol = Cholesky::new(cov)?;
    Ok(mvn_logpdf_chol(x, mean, &chol))
}

pub fn mvn_logpdf_chol(x: &Vector, mean: &Vector, chol: &Cholesky) -> f64 {
    let d = x.len() as f64;
    -0.5 * (d * LN_2PI + chol.ln_det() + chol.quad_form(&(x - mean)))
}

/// Lower-triangular Bartlett factor `A` with `A Aᵀ ~ Wishart(dof, I)`.
fn bartlett_factor(dof: f64, d: usize, rng: &mut RngState) -> Result<Matrix> {
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new(dof - i as f64).map_err(|e| {
            Error::InvalidParameter(format!("chi-squared({}): {e}", dof - i as f64))
        })?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    Ok(a)
}

fn check_dof(dof: f64, d: usize) -> Result<()> {
    if !(dof > d as f64 - 1.0) || !dof.is_finite() {
        return Err(Error::InvalidDof { dof, dim: d });
    }
    Ok(())
}

/// `W ~ Wishart(dof, scale)`, mean `dof · scale`.
pub fn wishart_sample(dof: f64, scale: &Matrix, rng: &mut RngState) -> Result<Matrix> {
    let d = scale.nrows();
    check_dof(dof, d)?;
    let chol = Cholesky::new(scale)?;
    let a = bartlett_factor(dof, d, rng)?;
    let la = chol.l() * a;
    Ok(symmetrize(&la * la.transpose()))
}

/// `Σ ~ IW(dof, scale)`, i.e. `Σ = W⁻¹` with `W ~ Wishart(dof, scale⁻¹)`.
///
/// With `scale = L Lᵀ` and Bartlett factor `A`, `W = L⁻ᵀ A Aᵀ L⁻¹`, so
/// `Σ = Bᵀ B` where `B = A⁻¹ Lᵀ` comes from one triangular solve.
pub fn invwishart_sample(dof: f64, scale: &Matrix, rng: &mut RngState) -> Result<Matrix> {
    let chol = Cholesky::new(scale)?;
    invwishart_sample_chol(dof, &chol, rng)
}

pub fn invwishart_sample_chol(dof: f64, scale: &Cholesky, rng: &mut RngState) -> Result<Matrix> {
    let d = scale.dim();
    check_dof(dof, d)?;
    let a = bartlett_factor(dof, d, rng)?;
    let b = a
        .solve_lower_triangular(&scale.l().transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let sigma = symmetrize(b.transpose() * b);
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("inverse-Wishart draw".into()));
    }
    Ok(sigma)
}

/// `ln IW(x | dof, scale)`.
pub fn invwishart_logpdf(x: &Matrix, dof: f64, scale: &Matrix) -> Result<f64> {
    let d = scale.nrows();
    check_dof(dof, d)?;
    let cs = Cholesky::new(scale)?;
    let cx = Cholesky::new(x)?;
    Ok(invwishart_logpdf_chol(&cx, dof, &cs))
}

pub(crate) fn invwishart_logpdf_chol(x: &Cholesky, dof: f64, scale: &Cholesky) -> f64 {
    let df = x.dim() as f64;
    // tr(Ψ X⁻¹) = ‖L_X⁻¹ L_Ψ‖²_F
    let m = x
        .l()
        .solve_lower_triangular(scale.l())
        .expect("cholesky factor has a positive diagonal");
    0.5 * dof * scale.ln_det()
        - 0.5 * dof * df * LN_2
        - ln_multigamma(x.dim(), 0.5 * dof)
        - 0.5 * (dof + df + 1.0) * x.ln_det()
        - 0.5 * m.norm_squared()
}

pub fn beta_sample(a: f64, b: f64, rng: &mut RngState) -> Result<f64> {
    let dist =
        Beta::new(a, b).map_err(|e| Error::InvalidParameter(format!("beta({a}, {b}): {e}")))?;
    // keep strictly inside (0,1) so ln π and ln(1−π) stay finite
    Ok(dist
        .sample(rng)
        .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

pub fn beta_logpdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn bernoulli_sample(p: f64, rng: &mut RngState) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("bernoulli({p})")));
    }
    let u: f64 = rng.random();
    Ok(u < p)
}

/// Density of the scalar Gaussian, used by test oracles.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}
