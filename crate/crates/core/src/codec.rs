//! Gate-additive embedding, DWR control and a reference decoder.
//!
//! Row `i` of the watermarked matrix is `x_i + w` when bit `i` is set and
//! `x_i` otherwise. The decoder here is a stand-in: the embedding scheme
//! leaves the detection statistic and threshold open, so two simple
//! normalized-correlation detectors are provided as baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{BitStream, SignalMatrix, WatermarkKey};
use crate::stats::{Cholesky, Vector};

pub fn embed(hosts: &SignalMatrix, w: &WatermarkKey, bits: &BitStream) -> Result<SignalMatrix> {
    check_dims(hosts, w, bits)?;
    let mut out = hosts.clone();
    let m = out.as_matrix_mut();
    for (i, set) in bits.iter().enumerate() {
        if set {
            let mut row = m.row_mut(i);
            row += w.vector().transpose();
        }
    }
    Ok(out)
}

pub(crate) fn check_dims(y: &SignalMatrix, w: &WatermarkKey, bits: &BitStream) -> Result<()> {
    if y.d() != w.d() {
        return Err(Error::DimensionMismatch(format!(
            "signal dimension {} vs watermark dimension {}",
            y.d(),
            w.d()
        )));
    }
    if y.n() != bits.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} signal rows vs {} message bits",
            y.n(),
            bits.len()
        )));
    }
    Ok(())
}

/// `10·log₁₀(σ_x² / σ_w²)` with pooled population variances.
pub fn measure_dwr(hosts: &SignalMatrix, w: &WatermarkKey) -> Result<f64> {
    let var_w = w.variance();
    if var_w <= 0.0 {
        return Err(Error::ZeroWatermark);
    }
    Ok(10.0 * (hosts.pooled_variance() / var_w).log10())
}

/// Rescale `w` so that `measure_dwr(hosts, result) == target_dwr`.
pub fn scale_to_dwr(
    hosts: &SignalMatrix,
    w: &WatermarkKey,
    target_dwr: f64,
) -> Result<WatermarkKey> {
    let var_w = w.variance();
    if var_w <= 0.0 {
        return Err(Error::ZeroWatermark);
    }
    let c = (hosts.pooled_variance() / (var_w * 10f64.powf(target_dwr / 10.0))).sqrt();
    Ok(WatermarkKey(w.vector() * c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// `f(y, w) = yᵀw / wᵀw`
    #[default]
    Correlation,
    /// `f(y, w) = yᵀ S⁻¹ w / wᵀ S⁻¹ w` with `S = (1/n) Σ y_i y_iᵀ`,
    /// the second-moment matrix of the received rows.
    Whitened,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub threshold: f64,
    pub detector: Detector,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            threshold: 0.5,
            detector: Detector::Correlation,
        }
    }
}

/// Detection statistic for every row.
pub fn detection_statistics(
    y: &SignalMatrix,
    w: &WatermarkKey,
    detector: Detector,
) -> Result<Vec<f64>> {
    if y.d() != w.d() {
        return Err(Error::DimensionMismatch(format!(
            "signal dimension {} vs watermark dimension {}",
            y.d(),
            w.d()
        )));
    }
    let direction: Vector = match detector {
        Detector::Correlation => w.vector().clone(),
        Detector::Whitened => {
            let m = y.as_matrix();
            let second = m.tr_mul(m) / y.n() as f64;
            Cholesky::new(&second)?.solve(w.vector())
        }
    };
    let norm = direction.dot(w.vector());
    if norm == 0.0 {
        return Err(Error::ZeroWatermark);
    }
    let proj: Vector = y.as_matrix() * &direction;
    Ok(proj.iter().map(|v| v / norm).collect())
}

pub fn decode(y: &SignalMatrix, w: &WatermarkKey, cfg: &DecoderConfig) -> Result<BitStream> {
    if !cfg.threshold.is_finite() {
        return Err(Error::InvalidParameter(
            "decoder threshold must be finite".into(),
        ));
    }
    let f = detection_statistics(y, w, cfg.detector)?;
    Ok(f.into_iter().map(|v| v > cfg.threshold).collect())
}
