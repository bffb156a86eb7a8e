//! Mean-field variational solver.
//!
//! The posterior is approximated by
//! `q(μ,Σ) q(w) Π_i q(b_i) q(π) q(m,V)` with a normal–inverse-Wishart,
//! Gaussian, Bernoulli, Beta and normal–inverse-Wishart factor
//! respectively. Each update sets one factor to its coordinate-ascent
//! optimum given the current moments of the others; see `DERIVATIONS.md`
//! for the algebra. [`VbSolver::elbo`] is the convergence monitor.

mod elbo;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use elbo::ElboTerms;

use crate::error::{Error, Result};
use crate::gibbs::logistic;
use crate::model::{Hyperparams, NiwParams};
use crate::report::{ElboPoint, PosteriorSummary};
use crate::signal::SignalMatrix;
use crate::stats::linalg::symmetrize;
use crate::stats::{digamma, Cholesky, Matrix, RngState, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbConfig {
    pub max_iters: usize,
    pub elbo_rel_tol: f64,
    /// Seeds the initial jitter of the bit responsibilities.
    pub seed: u64,
    pub credible_level: f64,
}

impl Default for VbConfig {
    fn default() -> Self {
        VbConfig {
            max_iters: 100,
            elbo_rel_tol: 1e-8,
            seed: 0,
            credible_level: 0.95,
        }
    }
}

impl VbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.elbo_rel_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "ELBO tolerance must be non-negative".into(),
            ));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "credible level {} outside (0, 1)",
                self.credible_level
            )));
        }
        Ok(())
    }
}

/// A normal–inverse-Wishart factor with its cached scale factorization.
#[derive(Clone, Debug)]
pub struct NiwFactor {
    pub params: NiwParams,
    scale_chol: Cholesky,
}

impl NiwFactor {
    pub fn new(params: NiwParams) -> Result<Self> {
        let scale_chol = Cholesky::new(&params.scale)?;
        Ok(NiwFactor { params, scale_chol })
    }

    pub fn mean(&self) -> &Vector {
        &self.params.mean
    }

    /// `⟨Σ⁻¹⟩ = dof · scale⁻¹`
    pub fn expected_precision(&self) -> Matrix {
        self.scale_chol.inverse() * self.params.dof
    }

    /// `⟨ln|Σ|⟩ = ln|scale| − d ln 2 − Σ_j ψ((dof + 1 − j)/2)`
    pub fn expected_ln_det(&self) -> f64 {
        let d = self.params.mean.len();
        let psi: f64 = (1..=d)
            .map(|j| digamma(0.5 * (self.params.dof + 1.0 - j as f64)).expect("dof > d - 1"))
            .sum();
        self.scale_chol.ln_det() - d as f64 * std::f64::consts::LN_2 - psi
    }

    pub fn scale_ln_det(&self) -> f64 {
        self.scale_chol.ln_det()
    }
}

/// Expectations under the current factors that other updates consume.
#[derive(Clone, Debug)]
pub struct MomentCache {
    pub sigma_inv: Matrix,
    pub v_inv: Matrix,
    pub mu: Vector,
    pub m: Vector,
    pub w: Vector,
    pub wwt: Matrix,
    pub ln_pi: f64,
    pub ln_one_minus_pi: f64,
}

#[derive(Clone, Debug)]
pub struct VbState {
    pub mu_sigma: NiwFactor,
    pub w_mean: Vector,
    pub w_cov: Matrix,
    /// `⟨b_i⟩`
    pub b: Vec<f64>,
    pub pi_a: f64,
    pub pi_b: f64,
    pub m_v: NiwFactor,
    pub moments: MomentCache,
}

fn beta_log_moments(a: f64, b: f64) -> Result<(f64, f64)> {
    let total = digamma(a + b)?;
    Ok((digamma(a)? - total, digamma(b)? - total))
}

impl VbState {
    /// Bits start at `½ + U(−0.01, 0.01)`; all other factors at their priors,
    /// with `q(w) = N(m₀, ⟨V⁻¹⟩⁻¹)`.
    pub fn initial(y: &SignalMatrix, h: &Hyperparams, seed: u64) -> Result<Self> {
        let mut rng = RngState::new(seed).named("vb-init");
        let b: Vec<f64> = (0..y.n())
            .map(|_| 0.5 + rng.random_range(-0.01..0.01))
            .collect();
        let prior = |mean: &Vector, scale: &Matrix| {
            NiwFactor::new(NiwParams {
                mean: mean.clone(),
                kappa: 1.0,
                dof: h.omega0,
                scale: scale.clone(),
            })
        };
        let mu_sigma = prior(&h.mu0, &h.sigma0)?;
        let m_v = prior(&h.m0, &h.v0)?;
        let v_inv = m_v.expected_precision();
        let w_cov = Cholesky::new(&v_inv)?.inverse();
        let w_mean = h.m0.clone();
        let (ln_pi, ln_one_minus_pi) = beta_log_moments(h.a_pi, h.b_pi)?;
        let moments = MomentCache {
            sigma_inv: mu_sigma.expected_precision(),
            v_inv,
            mu: mu_sigma.mean().clone(),
            m: m_v.mean().clone(),
            wwt: &w_cov + &w_mean * w_mean.transpose(),
            w: w_mean.clone(),
            ln_pi,
            ln_one_minus_pi,
        };
        Ok(VbState {
            mu_sigma,
            w_mean,
            w_cov,
            b,
            pi_a: h.a_pi,
            pi_b: h.b_pi,
            m_v,
            moments,
        })
    }
}

impl VbState {
    /// Recompute every cached moment from the current factors.
    pub fn refresh_moments(&mut self) -> Result<()> {
        let (ln_pi, ln_one_minus_pi) = beta_log_moments(self.pi_a, self.pi_b)?;
        self.moments = MomentCache {
            sigma_inv: self.mu_sigma.expected_precision(),
            v_inv: self.m_v.expected_precision(),
            mu: self.mu_sigma.mean().clone(),
            m: self.m_v.mean().clone(),
            w: self.w_mean.clone(),
            wwt: symmetrize(&self.w_cov + &self.w_mean * self.w_mean.transpose()),
            ln_pi,
            ln_one_minus_pi,
        };
        Ok(())
    }
}

/// Residual statistics of `r_i = y_i − ⟨b_i⟩⟨w⟩`.
pub(crate) struct ResidualStats {
    /// `Σ_i ⟨b_i⟩`
    pub sum_b: f64,
    /// `r̄`
    pub mean: Vector,
    /// `Σ_i (r_i − r̄)(r_i − r̄)ᵀ`
    pub scatter: Matrix,
    /// `Σ_i Cov(b_i w) = Σ⟨b_i⟩ ⟨wwᵀ⟩ − Σ⟨b_i⟩² ⟨w⟩⟨w⟩ᵀ`
    pub spread: Matrix,
}

/// Solver bound to one data set.
pub struct VbSolver<'a> {
    y: &'a SignalMatrix,
    h: &'a Hyperparams,
    y_mean: Vector,
    y_scatter: Matrix,
    pub state: VbState,
}

impl<'a> VbSolver<'a> {
    pub fn new(y: &'a SignalMatrix, h: &'a Hyperparams, seed: u64) -> Result<Self> {
        h.validate()?;
        if y.d() != h.d() {
            return Err(Error::DimensionMismatch(format!(
                "data dimension {} vs hyperparameter dimension {}",
                y.d(),
                h.d()
            )));
        }
        if y.n() == 0 {
            return Err(Error::DegenerateData("no data rows".into()));
        }
        let state = VbState::initial(y, h, seed)?;
        Ok(Self::with_state(y, h, state))
    }

    pub fn with_state(y: &'a SignalMatrix, h: &'a Hyperparams, state: VbState) -> Self {
        let (y_mean, y_scatter) = y.centered_scatter();
        VbSolver {
            y,
            h,
            y_mean,
            y_scatter,
            state,
        }
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        self.h
    }

    pub fn data(&self) -> &SignalMatrix {
        self.y
    }

    pub(crate) fn residual_stats(&self) -> ResidualStats {
        let s = &self.state;
        let n = self.y.n() as f64;
        let beta = Vector::from_vec(s.b.clone());
        let sum_b = beta.sum();
        let sum_b2 = beta.norm_squared();
        let mean_b = sum_b / n;
        let w = &s.moments.w;
        let weighted_y = self.y.as_matrix().tr_mul(&beta);
        // c = Σ (β_i − β̄)(y_i − ȳ) = Σ β_i y_i − n β̄ ȳ
        let c = &weighted_y - &self.y_mean * sum_b;
        let s_bb = sum_b2 - n * mean_b * mean_b;
        let scatter = symmetrize(
            &self.y_scatter - &c * w.transpose() - w * c.transpose() + w * w.transpose() * s_bb,
        );
        let spread = symmetrize(&s.moments.wwt * sum_b - w * w.transpose() * sum_b2);
        ResidualStats {
            sum_b,
            mean: &self.y_mean - w * mean_b,
            scatter,
            spread,
        }
    }

    /// `q(μ,Σ) = NIW(μ_μ, n+1, ω₀+n, Σ_Σ)` with
    /// `Σ_Σ = Σ₀ + n/(n+1)(r̄−μ₀)(r̄−μ₀)ᵀ + Σ(r_i−r̄)(r_i−r̄)ᵀ + Σ Cov(b_i w)`
    /// and `μ_μ = (μ₀ + n r̄)/(n+1)`.
    pub fn update_mu_sigma(&mut self) -> Result<()> {
        let rs = self.residual_stats();
        let h = self.h;
        let mut params = NiwParams::from_stats(
            &h.mu0,
            &h.sigma0,
            h.omega0,
            self.y.n(),
            &rs.mean,
            &rs.scatter,
        );
        params.scale = symmetrize(params.scale + rs.spread);
        let factor = NiwFactor::new(params)?;
        self.state.moments.sigma_inv = factor.expected_precision();
        self.state.moments.mu = factor.mean().clone();
        self.state.mu_sigma = factor;
        Ok(())
    }

    /// `V_w = (⟨V⁻¹⟩ + Σ⟨b_i⟩ ⟨Σ⁻¹⟩)⁻¹`,
    /// `m_w = V_w (⟨V⁻¹⟩⟨m⟩ + ⟨Σ⁻¹⟩ Σ⟨b_i⟩(y_i − ⟨μ⟩))`.
    pub fn update_w(&mut self) -> Result<()> {
        let mo = &self.state.moments;
        let beta = Vector::from_vec(self.state.b.clone());
        let sum_b = beta.sum();
        let weighted = self.y.as_matrix().tr_mul(&beta) - &mo.mu * sum_b;
        let precision = symmetrize(&mo.v_inv + &mo.sigma_inv * sum_b);
        let rhs = &mo.v_inv * &mo.m + &mo.sigma_inv * weighted;
        let chol = Cholesky::new(&precision)?;
        let mean = chol.solve(&rhs);
        let cov = chol.inverse();
        let mo = &mut self.state.moments;
        mo.wwt = symmetrize(&cov + &mean * mean.transpose());
        mo.w = mean.clone();
        self.state.w_mean = mean;
        self.state.w_cov = cov;
        Ok(())
    }

    /// Per-row logits `⟨ln π⟩ − ⟨ln(1−π)⟩ + ⟨w⟩ᵀ⟨Σ⁻¹⟩(y_i − ⟨μ⟩) − ½ tr(⟨Σ⁻¹⟩⟨wwᵀ⟩)`.
    pub fn bit_logits(&self) -> Vec<f64> {
        let mo = &self.state.moments;
        let dir = &mo.sigma_inv * &mo.w;
        let offset = mo.ln_pi
            - mo.ln_one_minus_pi
            - dir.dot(&mo.mu)
            - 0.5 * (&mo.sigma_inv * &mo.wwt).trace();
        let proj = self.y.as_matrix() * &dir;
        proj.iter().map(|p| offset + p).collect()
    }

    pub fn update_b(&mut self) -> Result<()> {
        let logits = self.bit_logits();
        if logits.iter().any(|t| t.is_nan()) {
            return Err(Error::NonFinite("bit responsibilities".into()));
        }
        self.state.b = logits.into_iter().map(logistic).collect();
        Ok(())
    }

    /// `q(π) = Beta(a_π + Σ⟨b_i⟩, b_π + n − Σ⟨b_i⟩)`
    pub fn update_pi(&mut self) -> Result<()> {
        let sum_b: f64 = self.state.b.iter().sum();
        let n = self.y.n() as f64;
        self.state.pi_a = self.h.a_pi + sum_b;
        self.state.pi_b = self.h.b_pi + n - sum_b;
        let (a, b) = beta_log_moments(self.state.pi_a, self.state.pi_b)?;
        self.state.moments.ln_pi = a;
        self.state.moments.ln_one_minus_pi = b;
        Ok(())
    }

    /// `q(m,V) = NIW((m₀+⟨w⟩)/2, 2, ω₀+1, V₀ + ½(⟨w⟩−m₀)(⟨w⟩−m₀)ᵀ + V_w)`.
    pub fn update_m_v(&mut self) -> Result<()> {
        let h = self.h;
        let mut params = NiwParams::from_stats(
            &h.m0,
            &h.v0,
            h.omega0,
            1,
            &self.state.w_mean,
            &Matrix::zeros(h.d(), h.d()),
        );
        params.scale = symmetrize(params.scale + &self.state.w_cov);
        let factor = NiwFactor::new(params)?;
        self.state.moments.v_inv = factor.expected_precision();
        self.state.moments.m = factor.mean().clone();
        self.state.m_v = factor;
        Ok(())
    }

    /// Full coordinate sweep in the order `(μ,Σ), w, b, π, (m,V)`.
    pub fn sweep(&mut self) -> Result<()> {
        self.update_mu_sigma()?;
        self.update_w()?;
        self.update_b()?;
        self.update_pi()?;
        self.update_m_v()
    }

    pub fn elbo(&self) -> Result<f64> {
        Ok(self.elbo_terms()?.total())
    }

    pub fn summary(&self, level: f64) -> PosteriorSummary {
        let z = Normal::new(0.0, 1.0)
            .expect("standard normal")
            .inverse_cdf(0.5 * (1.0 + level));
        let s = &self.state;
        let d = s.w_mean.len();
        let sd: Vec<f64> = (0..d).map(|j| s.w_cov[(j, j)].max(0.0).sqrt()).collect();
        let w_hat: Vec<f64> = s.w_mean.iter().copied().collect();
        let ci_lo = (0..d).map(|j| w_hat[j] - z * sd[j]).collect();
        let ci_hi = (0..d).map(|j| w_hat[j] + z * sd[j]).collect();
        PosteriorSummary {
            solver: "vb".into(),
            w_hat,
            ci_lo,
            ci_hi,
            credible_level: level,
            b_hat: s.b.iter().map(|&p| p > 0.5).collect(),
            b_soft: s.b.clone(),
            pi_hat: s.pi_a / (s.pi_a + s.pi_b),
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Run until the relative ELBO change drops below `elbo_rel_tol` or
/// `max_iters` sweeps are done. The trace starts with the initial ELBO
/// at iteration 0.
pub fn run_vb(
    y: &SignalMatrix,
    h: &Hyperparams,
    cfg: &VbConfig,
) -> Result<(Vec<ElboPoint>, PosteriorSummary)> {
    cfg.validate()?;
    let mut solver = VbSolver::new(y, h, cfg.seed)?;
    let mut trace = vec![ElboPoint {
        iter: 0,
        elbo: solver.elbo()?,
        delta_rel: f64::NAN,
    }];
    if !trace[0].elbo.is_finite() {
        return Err(Error::NonFiniteElbo(0));
    }
    let mut converged = false;
    let mut min_delta = f64::INFINITY;
    for iter in 1..=cfg.max_iters {
        solver.sweep()?;
        let elbo = solver.elbo()?;
        if !elbo.is_finite() {
            return Err(Error::NonFiniteElbo(iter));
        }
        let prev = trace.last().expect("non-empty trace").elbo;
        let delta_rel = (elbo - prev).abs() / prev.abs();
        min_delta = min_delta.min(elbo - prev);
        trace.push(ElboPoint {
            iter,
            elbo,
            delta_rel,
        });
        if delta_rel < cfg.elbo_rel_tol {
            converged = true;
            break;
        }
    }
    let mut summary = solver.summary(cfg.credible_level);
    let last = trace.last().expect("non-empty trace");
    summary
        .diagnostics
        .insert("sweeps".into(), last.iter as f64);
    summary.diagnostics.insert("final_elbo".into(), last.elbo);
    summary
        .diagnostics
        .insert("converged".into(), f64::from(u8::from(converged)));
    summary
        .diagnostics
        .insert("min_elbo_step".into(), min_delta);
    Ok((trace, summary))
}
