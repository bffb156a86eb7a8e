//! Gibbs sampler over the exact conjugate conditionals.
//!
//! One sweep draws, in order: `(μ, Σ) | x`, `w | y, b, μ, Σ, m, V`,
//! `b | y, μ, Σ, m, V, π`, `π | b`, `(m, V) | w`, and finally refreshes
//! `x_i = y_i − b_i w`. The bit conditional scores each row against the
//! two predictive Gaussians `N(μ, Σ)` and `N(μ + m, Σ + V)`, i.e. with the
//! watermark integrated out under its prior.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hyperparams, ModelState, NiwParams};
use crate::report::{percentile, PosteriorSummary};
use crate::signal::{BitStream, SignalMatrix};
use crate::stats::dist::{
    beta_logpdf, invwishart_logpdf_chol, invwishart_sample_chol, mvn_logpdf_chol,
    standard_normal_vector, LN_2PI,
};
use crate::stats::linalg::{row_quad_forms, symmetrize};
use crate::stats::{bernoulli_sample, beta_sample, Cholesky, Matrix, RngState, Vector};

/// Logistic argument clamp.
const LOGIT_CLAMP: f64 = 700.0;
const ROW_CHUNK: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub total_iters: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub credible_level: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            total_iters: 2000,
            burn_in: 1000,
            thinning: 1,
            seed: 0,
            credible_level: 0.95,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iters {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below total iterations {}",
                self.burn_in, self.total_iters
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter(
                "thinning must be at least 1".into(),
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

    pub fn kept(&self) -> usize {
        (self.total_iters - self.burn_in) / self.thinning
    }
}

/// Post-burn-in samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainTrace {
    pub iters: Vec<usize>,
    pub pi: Vec<f64>,
    pub log_joint: Vec<f64>,
    pub w: Vec<Vector>,
    pub bits: Vec<BitStream>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.iters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iters.is_empty()
    }

    /// Fraction of kept sweeps with `b_i = 1`.
    pub fn bit_frequencies(&self) -> Vec<f64> {
        let n = self.bits.first().map_or(0, BitStream::len);
        let mut counts = vec![0usize; n];
        for b in &self.bits {
            for (c, set) in counts.iter_mut().zip(b.iter()) {
                *c += usize::from(set);
            }
        }
        let k = self.bits.len() as f64;
        counts.into_iter().map(|c| c as f64 / k).collect()
    }

    /// `iter,pi,log_joint,w_0..w_{d-1}`
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let d = self.w.first().map_or(0, Vector::len);
        let mut header = vec!["iter".to_string(), "pi".into(), "log_joint".into()];
        header.extend((0..d).map(|j| format!("w_{j}")));
        wtr.write_record(&header)?;
        for k in 0..self.len() {
            let mut rec = vec![
                self.iters[k].to_string(),
                self.pi[k].to_string(),
                self.log_joint[k].to_string(),
            ];
            rec.extend(self.w[k].iter().map(f64::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// `i,b_freq`
    pub fn write_bit_freq_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["i", "b_freq"])?;
        for (i, f) in self.bit_frequencies().iter().enumerate() {
            wtr.write_record([i.to_string(), f.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Mean and centered scatter of the current hosts.
#[derive(Clone, Debug)]
pub struct HostStats {
    pub n: usize,
    pub mean: Vector,
    pub scatter: Matrix,
}

impl HostStats {
    pub fn of(x: &SignalMatrix) -> Self {
        if x.n() == 0 {
            return HostStats {
                n: 0,
                mean: Vector::zeros(x.d()),
                scatter: Matrix::zeros(x.d(), x.d()),
            };
        }
        let (mean, scatter) = x.centered_scatter();
        HostStats {
            n: x.n(),
            mean,
            scatter,
        }
    }
}

/// Parameters of the `(μ, Σ)` conditional.
pub fn mu_sigma_posterior(x: &SignalMatrix, h: &Hyperparams) -> NiwParams {
    mu_sigma_posterior_from_stats(&HostStats::of(x), h)
}

pub fn mu_sigma_posterior_from_stats(stats: &HostStats, h: &Hyperparams) -> NiwParams {
    NiwParams::from_stats(
        &h.mu0,
        &h.sigma0,
        h.omega0,
        stats.n,
        &stats.mean,
        &stats.scatter,
    )
}

/// Draw `Σ ~ IW(dof, scale)`, then `μ | Σ ~ N(mean, Σ/kappa)`.
pub fn sample_niw(p: &NiwParams, rng: &mut RngState) -> Result<(Vector, Matrix)> {
    let scale = Cholesky::new(&p.scale)?;
    let sigma = invwishart_sample_chol(p.dof, &scale, rng)?;
    let chol = Cholesky::new(&sigma)?;
    let z = standard_normal_vector(p.mean.len(), rng);
    let mu = &p.mean + chol.l() * z / p.kappa.sqrt();
    Ok((mu, sigma))
}

pub fn update_mu_sigma(
    x: &SignalMatrix,
    h: &Hyperparams,
    rng: &mut RngState,
) -> Result<(Vector, Matrix)> {
    sample_niw(&mu_sigma_posterior(x, h), rng)
}

/// Gaussian in information form: covariance is `precision⁻¹`.
#[derive(Clone, Debug)]
pub struct GaussianPosterior {
    pub mean: Vector,
    pub precision: Cholesky,
}

impl GaussianPosterior {
    pub fn covariance(&self) -> Matrix {
        self.precision.inverse()
    }

    /// `mean + L⁻ᵀ z`, which has covariance `(L Lᵀ)⁻¹`.
    pub fn sample(&self, rng: &mut RngState) -> Vector {
        let z = standard_normal_vector(self.mean.len(), rng);
        let dz = self
            .precision
            .l()
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal");
        &self.mean + dz
    }
}

/// `V_w = (V⁻¹ + n₁Σ⁻¹)⁻¹`, `m_w = V_w (V⁻¹ m + Σ⁻¹ Σ_{b_i=1} (y_i − μ))`,
/// from `n₁` and the residual sum.
pub fn w_posterior_from_stats(
    n1: usize,
    resid_sum: &Vector,
    sigma: &Cholesky,
    v: &Cholesky,
    m: &Vector,
) -> Result<GaussianPosterior> {
    let precision = symmetrize(v.inverse() + sigma.inverse() * n1 as f64);
    let rhs = v.solve(m) + sigma.solve(resid_sum);
    let precision = Cholesky::new(&precision)?;
    let mean = precision.solve(&rhs);
    Ok(GaussianPosterior { mean, precision })
}

fn residual_sum(y: &SignalMatrix, bits: &BitStream, mu: &Vector) -> (usize, Vector) {
    let mut sum = Vector::zeros(y.d());
    let mut n1 = 0;
    let m = y.as_matrix();
    for (i, set) in bits.iter().enumerate() {
        if set {
            sum += m.row(i).transpose();
            n1 += 1;
        }
    }
    sum -= mu * n1 as f64;
    (n1, sum)
}

pub fn w_posterior(y: &SignalMatrix, state: &ModelState) -> Result<GaussianPosterior> {
    check_rows(y, &state.bits)?;
    let (n1, sum) = residual_sum(y, &state.bits, &state.mu);
    w_posterior_from_stats(
        n1,
        &sum,
        &Cholesky::new(&state.sigma)?,
        &Cholesky::new(&state.v)?,
        &state.m,
    )
}

pub fn update_w(y: &SignalMatrix, state: &ModelState, rng: &mut RngState) -> Result<Vector> {
    Ok(w_posterior(y, state)?.sample(rng))
}

pub(crate) fn logistic(t: f64) -> f64 {
    let t = t.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-t).exp())
}

/// Per-row `ln N(y_i | mean, cov)`, chunked over rows in parallel.
pub fn row_logpdfs(y: &SignalMatrix, mean: &Vector, cov: &Cholesky) -> Vec<f64> {
    let precision = cov.inverse();
    let norm = -0.5 * (y.d() as f64 * LN_2PI + cov.ln_det());
    let centered = y.centered_by(mean);
    let n = y.n();
    let starts: Vec<usize> = (0..n).step_by(ROW_CHUNK).collect();
    starts
        .par_iter()
        .flat_map_iter(|&s| {
            let rows = centered.rows(s, ROW_CHUNK.min(n - s)).into_owned();
            row_quad_forms(&rows, &precision)
                .into_iter()
                .map(move |q| norm - 0.5 * q)
        })
        .collect()
}

/// `π̂_i = P(b_i = 1 | rest)`, in the log domain:
/// `logistic(ln π − ln(1−π) + ln N(y_i|μ+m, Σ+V) − ln N(y_i|μ, Σ))`.
pub fn bit_probabilities(y: &SignalMatrix, state: &ModelState) -> Result<Vec<f64>> {
    let sigma = Cholesky::new(&state.sigma)?;
    let both = Cholesky::new(&symmetrize(&state.sigma + &state.v))?;
    bit_probabilities_chol(y, state, &sigma, &both)
}

fn bit_probabilities_chol(
    y: &SignalMatrix,
    state: &ModelState,
    sigma: &Cholesky,
    both: &Cholesky,
) -> Result<Vec<f64>> {
    if !(state.pi > 0.0 && state.pi < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "π = {} outside (0, 1)",
            state.pi
        )));
    }
    let prior_logit = state.pi.ln() - (-state.pi).ln_1p();
    let off = row_logpdfs(y, &state.mu, sigma);
    let on = row_logpdfs(y, &(&state.mu + &state.m), both);
    Ok(on
        .iter()
        .zip(&off)
        .map(|(a, b)| logistic(prior_logit + a - b))
        .collect())
}

fn draw_bits(probs: &[f64], rng: &mut RngState) -> BitStream {
    probs.iter().map(|&p| rng.random::<f64>() < p).collect()
}

pub fn update_b(y: &SignalMatrix, state: &ModelState, rng: &mut RngState) -> Result<BitStream> {
    Ok(draw_bits(&bit_probabilities(y, state)?, rng))
}

/// `(a_π + #ones, b_π + #zeros)`
pub fn pi_posterior(b: &BitStream, h: &Hyperparams) -> (f64, f64) {
    let ones = b.ones();
    (h.a_pi + ones as f64, h.b_pi + (b.len() - ones) as f64)
}

pub fn update_pi(b: &BitStream, h: &Hyperparams, rng: &mut RngState) -> Result<f64> {
    let (a, bb) = pi_posterior(b, h);
    beta_sample(a, bb, rng)
}

/// `V_v = V₀ + ½(w − m₀)(w − m₀)ᵀ`, `m_m = (m₀ + w)/2`, `dof = ω₀ + 1`.
pub fn m_v_posterior(w: &Vector, h: &Hyperparams) -> NiwParams {
    NiwParams::from_stats(
        &h.m0,
        &h.v0,
        h.omega0,
        1,
        w,
        &Matrix::zeros(w.len(), w.len()),
    )
}

pub fn update_m_v(w: &Vector, h: &Hyperparams, rng: &mut RngState) -> Result<(Vector, Matrix)> {
    sample_niw(&m_v_posterior(w, h), rng)
}

fn check_rows(y: &SignalMatrix, bits: &BitStream) -> Result<()> {
    if y.n() != bits.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} bits",
            y.n(),
            bits.len()
        )));
    }
    Ok(())
}

/// `x_i = y_i − w` where `b_i = 1`, else `y_i`.
pub fn update_x(y: &SignalMatrix, w: &Vector, b: &BitStream) -> Result<SignalMatrix> {
    check_rows(y, b)?;
    if w.len() != y.d() {
        return Err(Error::DimensionMismatch(format!(
            "watermark dimension {} vs signal dimension {}",
            w.len(),
            y.d()
        )));
    }
    let mut x = y.clone();
    let m = x.as_matrix_mut();
    for (i, set) in b.iter().enumerate() {
        if set {
            let mut row = m.row_mut(i);
            row -= w.transpose();
        }
    }
    Ok(x)
}

/// Log joint density of the full state, dropping the `y | x, w, b` delta.
pub fn log_joint(state: &ModelState, h: &Hyperparams, stats: &HostStats) -> Result<f64> {
    let sigma = Cholesky::new(&state.sigma)?;
    let v = Cholesky::new(&state.v)?;
    log_joint_chol(state, h, stats, &sigma, &v)
}

fn log_joint_chol(
    state: &ModelState,
    h: &Hyperparams,
    stats: &HostStats,
    sigma: &Cholesky,
    v: &Cholesky,
) -> Result<f64> {
    let d = h.d() as f64;
    let n = stats.n as f64;
    // Σ_i ln N(x_i | μ, Σ) from sufficient statistics
    let off = &stats.mean - &state.mu;
    let about_mu = &stats.scatter + &off * off.transpose() * n;
    let tr = sigma.solve_matrix(&about_mu).trace();
    let hosts = -0.5 * (n * d * LN_2PI + n * sigma.ln_det() + tr);

    let ones = state.bits.ones() as f64;
    let bits = ones * state.pi.ln() + (n - ones) * (-state.pi).ln_1p();

    let sigma0 = Cholesky::new(&h.sigma0)?;
    let v0 = Cholesky::new(&h.v0)?;
    let total = hosts
        + bits
        + mvn_logpdf_chol(&state.w, &state.m, v)
        + mvn_logpdf_chol(&state.mu, &h.mu0, sigma)
        + invwishart_logpdf_chol(sigma, h.omega0, &sigma0)
        + mvn_logpdf_chol(&state.m, &h.m0, v)
        + invwishart_logpdf_chol(v, h.omega0, &v0)
        + beta_logpdf(state.pi, h.a_pi, h.b_pi);
    Ok(total)
}

/// Starting point: π = ½, bits ~ Bernoulli(½), w = 0, `(μ, Σ) = (μ₀, Σ₀)`,
/// `(m, V) = (m₀, V₀)`.
pub fn initial_state(y: &SignalMatrix, h: &Hyperparams, rng: &mut RngState) -> Result<ModelState> {
    let bits = (0..y.n())
        .map(|_| bernoulli_sample(0.5, rng))
        .collect::<Result<Vec<_>>>()
        .map(BitStream)?;
    let w = Vector::zeros(y.d());
    let x = update_x(y, &w, &bits)?;
    Ok(ModelState {
        mu: h.mu0.clone(),
        sigma: h.sigma0.clone(),
        m: h.m0.clone(),
        v: h.v0.clone(),
        w,
        bits,
        pi: 0.5,
        x,
    })
}

/// One full sweep. `stats` must describe `state.x` on entry and is
/// refreshed to describe the new `x` on exit. Returns the log joint.
pub fn sweep(
    y: &SignalMatrix,
    h: &Hyperparams,
    state: &mut ModelState,
    stats: &mut HostStats,
    rng: &mut RngState,
) -> Result<f64> {
    let (mu, sigma) = sample_niw(&mu_sigma_posterior_from_stats(stats, h), rng)?;
    state.mu = mu;
    state.sigma = sigma;
    let sigma_chol = Cholesky::new(&state.sigma)?;
    let v_chol = Cholesky::new(&state.v)?;

    let (n1, sum) = residual_sum(y, &state.bits, &state.mu);
    state.w = w_posterior_from_stats(n1, &sum, &sigma_chol, &v_chol, &state.m)?.sample(rng);

    let both = Cholesky::new(&symmetrize(&state.sigma + &state.v))?;
    let probs = bit_probabilities_chol(y, state, &sigma_chol, &both)?;
    state.bits = draw_bits(&probs, rng);

    state.pi = update_pi(&state.bits, h, rng)?;

    let (m, v) = update_m_v(&state.w, h, rng)?;
    state.m = m;
    state.v = v;

    state.x = update_x(y, &state.w, &state.bits)?;
    *stats = HostStats::of(&state.x);

    let v_chol = Cholesky::new(&state.v)?;
    log_joint_chol(state, h, stats, &sigma_chol, &v_chol)
}

pub fn run_gibbs(
    y: &SignalMatrix,
    h: &Hyperparams,
    cfg: &McmcConfig,
) -> Result<(ChainTrace, PosteriorSummary)> {
    cfg.validate()?;
    h.validate()?;
    if y.d() != h.d() {
        return Err(Error::DimensionMismatch(format!(
            "data dimension {} vs hyperparameter dimension {}",
            y.d(),
            h.d()
        )));
    }
    let root = RngState::new(cfg.seed);
    let mut state = initial_state(y, h, &mut root.named("init"))?;
    let mut rng = root.named("chain");
    let mut stats = HostStats::of(&state.x);
    let mut trace = ChainTrace::default();

    for iter in 0..cfg.total_iters {
        let lj = sweep(y, h, &mut state, &mut stats, &mut rng)?;
        if !lj.is_finite() {
            return Err(Error::NonFinite(format!("log joint at sweep {iter}")));
        }
        if iter >= cfg.burn_in && (iter - cfg.burn_in + 1).is_multiple_of(cfg.thinning) {
            trace.iters.push(iter);
            trace.pi.push(state.pi);
            trace.log_joint.push(lj);
            trace.w.push(state.w.clone());
            trace.bits.push(state.bits.clone());
        }
    }
    let summary = summarize(&trace, cfg.credible_level);
    Ok((trace, summary))
}

/// Posterior means, majority-vote bits and percentile intervals.
pub fn summarize(trace: &ChainTrace, level: f64) -> PosteriorSummary {
    let k = trace.len() as f64;
    let d = trace.w.first().map_or(0, Vector::len);
    let mut w_hat = vec![0.0; d];
    let mut ci_lo = vec![0.0; d];
    let mut ci_hi = vec![0.0; d];
    for j in 0..d {
        let mut col: Vec<f64> = trace.w.iter().map(|w| w[j]).collect();
        w_hat[j] = col.iter().sum::<f64>() / k;
        ci_lo[j] = percentile(&mut col, (1.0 - level) / 2.0);
        ci_hi[j] = percentile(&mut col, (1.0 + level) / 2.0);
    }
    let b_soft = trace.bit_frequencies();
    let b_hat = b_soft.iter().map(|&f| f > 0.5).collect();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("kept_samples".into(), k);
    diagnostics.insert(
        "mean_log_joint".into(),
        trace.log_joint.iter().sum::<f64>() / k,
    );
    PosteriorSummary {
        solver: "mcmc".into(),
        w_hat,
        ci_lo,
        ci_hi,
        credible_level: level,
        b_hat,
        b_soft,
        pi_hat: trace.pi.iter().sum::<f64>() / k,
        diagnostics,
    }
}
