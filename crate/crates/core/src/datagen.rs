//! Synthetic hosts, watermark and message bits.
//!
//! The master seed is split into three named streams (`hosts`, `watermark`,
//! `bits`) so that, for instance, changing `n` leaves the watermark draw
//! untouched. Within the watermark stream the draws are consumed in a fixed
//! order: mean covariance, mean, watermark covariance, watermark.

use serde::{Deserialize, Serialize};

use crate::codec::scale_to_dwr;
use crate::error::{Error, Result};
use crate::signal::{BitStream, SignalMatrix, WatermarkKey};
use crate::stats::dist::{mvn_sample_chol, standard_normal_vector};
use crate::stats::{
    bernoulli_sample, invwishart_sample, mvn_sample, Cholesky, Matrix, RngState, Vector,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub dwr_db: f64,
    pub seed: u64,
    pub p_one: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 4096,
            d: 64,
            dwr_db: 30.0,
            seed: 0,
            p_one: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.d < 1 {
            return Err(Error::InvalidParameter("n and d must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_one) {
            return Err(Error::InvalidParameter(format!("p_one = {}", self.p_one)));
        }
        if !self.dwr_db.is_finite() {
            return Err(Error::InvalidParameter("dwr must be finite".into()));
        }
        Ok(())
    }

    pub fn rng(&self) -> RngState {
        RngState::new(self.seed)
    }
}

/// A single `IW(d+1, I)` draw, the covariance-of-covariances used throughout.
fn structured_covariance(d: usize, rng: &mut RngState) -> Result<Matrix> {
    invwishart_sample(d as f64 + 1.0, &Matrix::identity(d, d), rng)
}

/// Hosts `x_i ~ N(0, Σ*)`, with one shared `Σ* ~ IW(d+1, I)`.
pub fn generate_hosts(cfg: &SynthConfig, rng: &RngState) -> Result<SignalMatrix> {
    let (hosts, _) = generate_hosts_with_cov(cfg, rng)?;
    Ok(hosts)
}

/// As [`generate_hosts`], also returning the drawn covariance.
pub fn generate_hosts_with_cov(
    cfg: &SynthConfig,
    rng: &RngState,
) -> Result<(SignalMatrix, Matrix)> {
    cfg.validate()?;
    let mut rng = rng.named("hosts");
    let cov = structured_covariance(cfg.d, &mut rng)?;
    let chol = Cholesky::new(&cov)?;
    let mut m = Matrix::zeros(cfg.n, cfg.d);
    for i in 0..cfg.n {
        let z = standard_normal_vector(cfg.d, &mut rng);
        let x = chol.l() * z;
        m.row_mut(i).copy_from(&x.transpose());
    }
    Ok((SignalMatrix::new(m), cov))
}

/// Raw watermark draw before zero-mean shifting and DWR scaling.
pub fn draw_raw_watermark(d: usize, rng: &RngState) -> Result<Vector> {
    let mut rng = rng.named("watermark");
    let mean_cov = structured_covariance(d, &mut rng)?;
    let mean = mvn_sample(&Vector::zeros(d), &mean_cov, &mut rng)?;
    let cov = structured_covariance(d, &mut rng)?;
    mvn_sample_chol(&mean, &Cholesky::new(&cov)?, &mut rng)
}

/// Shift to zero empirical mean.
pub fn zero_mean(w: &Vector) -> Vector {
    let mean = w.mean();
    w.map(|v| v - mean)
}

pub fn generate_watermark(
    cfg: &SynthConfig,
    hosts: &SignalMatrix,
    rng: &RngState,
) -> Result<WatermarkKey> {
    cfg.validate()?;
    if hosts.d() != cfg.d {
        return Err(Error::DimensionMismatch(format!(
            "hosts have dimension {}, config says {}",
            hosts.d(),
            cfg.d
        )));
    }
    let w = zero_mean(&draw_raw_watermark(cfg.d, rng)?);
    scale_to_dwr(hosts, &WatermarkKey(w), cfg.dwr_db)
}

pub fn generate_bits(cfg: &SynthConfig, rng: &RngState) -> Result<BitStream> {
    cfg.validate()?;
    let mut rng = rng.named("bits");
    (0..cfg.n)
        .map(|_| bernoulli_sample(cfg.p_one, &mut rng))
        .collect::<Result<Vec<_>>>()
        .map(BitStream)
}

/// Hosts, watermark and bits for one synthetic experiment.
#[derive(Clone, Debug)]
pub struct SyntheticSet {
    pub hosts: SignalMatrix,
    pub watermark: WatermarkKey,
    pub bits: BitStream,
}

impl SyntheticSet {
    pub fn generate(cfg: &SynthConfig) -> Result<Self> {
        let rng = cfg.rng();
        let hosts = generate_hosts(cfg, &rng)?;
        let watermark = generate_watermark(cfg, &hosts, &rng)?;
        let bits = generate_bits(cfg, &rng)?;
        Ok(SyntheticSet {
            hosts,
            watermark,
            bits,
        })
    }

    pub fn watermarked(&self) -> Result<SignalMatrix> {
        crate::codec::embed(&self.hosts, &self.watermark, &self.bits)
    }
}
