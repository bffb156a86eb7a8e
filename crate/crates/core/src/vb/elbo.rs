//! Evidence lower bound for the mean-field factorization.

use std::f64::consts::LN_2;

use serde::Serialize;

use super::{NiwFactor, VbSolver};
use crate::error::Result;
use crate::stats::dist::{ln_beta, LN_2PI};
use crate::stats::{digamma, ln_multigamma, Cholesky, Matrix, Vector};

/// ELBO split into expected log joint terms and entropies.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ElboTerms {
    pub likelihood: f64,
    pub bits: f64,
    pub watermark: f64,
    pub host_prior: f64,
    pub watermark_prior: f64,
    pub pi_prior: f64,
    pub entropy_host: f64,
    pub entropy_w: f64,
    pub entropy_bits: f64,
    pub entropy_pi: f64,
    pub entropy_watermark_params: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.likelihood
            + self.bits
            + self.watermark
            + self.host_prior
            + self.watermark_prior
            + self.pi_prior
            + self.entropy_host
            + self.entropy_w
            + self.entropy_bits
            + self.entropy_pi
            + self.entropy_watermark_params
    }
}

/// `E ln N(μ | μ₀, Σ) + E ln IW(Σ | ω₀, Σ₀)` under a NIW factor.
fn niw_prior_term(
    q: &NiwFactor,
    precision: &Matrix,
    ln_det: f64,
    prior_mean: &Vector,
    prior_scale: &Matrix,
    prior_dof: f64,
) -> Result<f64> {
    let d = prior_mean.len() as f64;
    let off = q.mean() - prior_mean;
    let normal = -0.5 * (d * LN_2PI + ln_det + off.dot(&(precision * &off)) + d / q.params.kappa);
    let prior_ln_det = Cholesky::new(prior_scale)?.ln_det();
    let iw = 0.5 * prior_dof * prior_ln_det
        - 0.5 * prior_dof * d * LN_2
        - ln_multigamma(prior_mean.len(), 0.5 * prior_dof)
        - 0.5 * (prior_dof + d + 1.0) * ln_det
        - 0.5 * (prior_scale * precision).trace();
    Ok(normal + iw)
}

/// `−E ln q(μ, Σ)` for a NIW factor.
fn niw_entropy(q: &NiwFactor, ln_det: f64) -> f64 {
    let p = &q.params;
    let d = p.mean.len() as f64;
    let normal = 0.5 * (d * LN_2PI + ln_det - d * p.kappa.ln() + d);
    let iw = -0.5 * p.dof * q.scale_ln_det()
        + 0.5 * p.dof * d * LN_2
        + ln_multigamma(p.mean.len(), 0.5 * p.dof)
        + 0.5 * (p.dof + d + 1.0) * ln_det
        + 0.5 * p.dof * d;
    normal + iw
}

fn bernoulli_entropy(p: f64) -> f64 {
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -(xlnx(p) + xlnx(1.0 - p))
}

fn beta_entropy(a: f64, b: f64) -> Result<f64> {
    Ok(
        ln_beta(a, b) - (a - 1.0) * digamma(a)? - (b - 1.0) * digamma(b)?
            + (a + b - 2.0) * digamma(a + b)?,
    )
}

impl VbSolver<'_> {
    pub fn elbo_terms(&self) -> Result<ElboTerms> {
        let s = &self.state;
        let h = self.hyperparams();
        let n = self.data().n() as f64;
        let d = h.d() as f64;
        let mo = &s.moments;

        let p = &mo.sigma_inv;
        let ln_det_sigma = s.mu_sigma.expected_ln_det();
        let q = &mo.v_inv;
        let ln_det_v = s.m_v.expected_ln_det();

        // Σ_i E[(y_i − b_i w − μ)ᵀ Σ⁻¹ (y_i − b_i w − μ)]
        let rs = self.residual_stats();
        let off = &rs.mean - &mo.mu;
        let about_mu = &rs.scatter + &off * off.transpose() * n;
        let quad = (p * (about_mu + &rs.spread)).trace() + n * d / s.mu_sigma.params.kappa;
        let likelihood = -0.5 * (n * (d * LN_2PI + ln_det_sigma) + quad);

        let bits = rs.sum_b * mo.ln_pi + (n - rs.sum_b) * mo.ln_one_minus_pi;

        let wm = &s.w_mean - &mo.m;
        let watermark = -0.5
            * (d * LN_2PI
                + ln_det_v
                + wm.dot(&(q * &wm))
                + (q * &s.w_cov).trace()
                + d / s.m_v.params.kappa);

        let host_prior = niw_prior_term(&s.mu_sigma, p, ln_det_sigma, &h.mu0, &h.sigma0, h.omega0)?;
        let watermark_prior = niw_prior_term(&s.m_v, q, ln_det_v, &h.m0, &h.v0, h.omega0)?;
        let pi_prior = -ln_beta(h.a_pi, h.b_pi)
            + (h.a_pi - 1.0) * mo.ln_pi
            + (h.b_pi - 1.0) * mo.ln_one_minus_pi;

        let w_cov_ln_det = Cholesky::new(&s.w_cov)?.ln_det();
        let entropy_w = 0.5 * (d * (1.0 + LN_2PI) + w_cov_ln_det);

        Ok(ElboTerms {
            likelihood,
            bits,
            watermark,
            host_prior,
            watermark_prior,
            pi_prior,
            entropy_host: niw_entropy(&s.mu_sigma, ln_det_sigma),
            entropy_w,
            entropy_bits: s.b.iter().map(|&b| bernoulli_entropy(b)).sum(),
            entropy_pi: beta_entropy(s.pi_a, s.pi_b)?,
            entropy_watermark_params: niw_entropy(&s.m_v, ln_det_v),
        })
    }
}
