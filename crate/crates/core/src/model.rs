//! Priors and latent state of the attack model.
//!
//! ```text
//! y_i = x_i + b_i w
//! x_i ~ N(μ, Σ)            w ~ N(m, V)           b_i ~ Bernoulli(π)
//! (μ, Σ) ~ N(μ₀, Σ) IW(ω₀, Σ₀)
//! (m, V) ~ N(m₀, V) IW(ω₀, V₀)
//! π ~ Beta(a_π, b_π)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{BitStream, SignalMatrix};
use crate::stats::{Cholesky, Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub mu0: Vector,
    pub sigma0: Matrix,
    pub omega0: f64,
    pub m0: Vector,
    pub v0: Matrix,
    pub a_pi: f64,
    pub b_pi: f64,
}

impl Hyperparams {
    pub fn d(&self) -> usize {
        self.mu0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        if self.m0.len() != d || self.sigma0.shape() != (d, d) || self.v0.shape() != (d, d) {
            return Err(Error::DimensionMismatch(
                "hyperparameter shapes disagree".into(),
            ));
        }
        if !(self.omega0 > d as f64 - 1.0) {
            return Err(Error::InvalidDof {
                dof: self.omega0,
                dim: d,
            });
        }
        if !(self.a_pi > 0.0 && self.b_pi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Beta prior ({}, {}) must be positive",
                self.a_pi, self.b_pi
            )));
        }
        Cholesky::new(&self.sigma0)?;
        Cholesky::new(&self.v0)?;
        Ok(())
    }
}

/// Data-driven hyperparameters:
/// `a_π = b_π = n/2`, `μ₀ = m₀ = ȳ`, `ω₀ = d + 1`,
/// `Σ₀ = (1/n) Σ (y_i − ȳ)(y_i − ȳ)ᵀ`, `V₀ = Σ₀ / 10^(dwr/10)`.
pub fn init_hyperparams(y: &SignalMatrix, dwr_db: f64) -> Result<Hyperparams> {
    let n = y.n();
    let d = y.d();
    if n < 2 || n <= d {
        // The centered scatter has rank at most n − 1.
        return Err(Error::DegenerateData(format!(
            "{n} rows cannot give a full-rank covariance in dimension {d}"
        )));
    }
    if !dwr_db.is_finite() {
        return Err(Error::InvalidParameter("dwr must be finite".into()));
    }
    let (mean, scatter) = y.centered_scatter();
    let sigma0 = scatter / n as f64;
    // A covariance that only factors after jitter is rank deficient, and
    // every later solve would inherit that.
    match Cholesky::new(&sigma0) {
        Ok(c) if c.jitter() == 0.0 => {}
        _ => {
            return Err(Error::DegenerateData(
                "sample covariance is not positive definite".into(),
            ))
        }
    }
    let v0 = &sigma0 / 10f64.powf(dwr_db / 10.0);
    Ok(Hyperparams {
        mu0: mean.clone(),
        sigma0,
        omega0: d as f64 + 1.0,
        m0: mean,
        v0,
        a_pi: 0.5 * n as f64,
        b_pi: 0.5 * n as f64,
    })
}

/// Normal–inverse-Wishart parameters:
/// `Σ ~ IW(dof, scale)`, `μ | Σ ~ N(mean, Σ / kappa)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiwParams {
    pub mean: Vector,
    pub kappa: f64,
    pub dof: f64,
    pub scale: Matrix,
}

impl NiwParams {
    /// Posterior after `n` observations with mean `xbar` and centered
    /// scatter `scatter`, from a prior with unit `kappa`.
    pub fn from_stats(
        prior_mean: &Vector,
        prior_scale: &Matrix,
        prior_dof: f64,
        n: usize,
        xbar: &Vector,
        scatter: &Matrix,
    ) -> Self {
        if n == 0 {
            return NiwParams {
                mean: prior_mean.clone(),
                kappa: 1.0,
                dof: prior_dof,
                scale: prior_scale.clone(),
            };
        }
        let nf = n as f64;
        let off = xbar - prior_mean;
        let scale = crate::stats::linalg::symmetrize(
            prior_scale + &off * off.transpose() * (nf / (nf + 1.0)) + scatter,
        );
        NiwParams {
            mean: (prior_mean + xbar * nf) / (nf + 1.0),
            kappa: nf + 1.0,
            dof: prior_dof + nf,
            scale,
        }
    }
}

/// Full latent state of one Gibbs chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub mu: Vector,
    pub sigma: Matrix,
    pub m: Vector,
    pub v: Matrix,
    pub w: Vector,
    pub bits: BitStream,
    pub pi: f64,
    /// Hosts implied by the current `(w, b)`: `x_i = y_i − b_i w`.
    pub x: SignalMatrix,
}
