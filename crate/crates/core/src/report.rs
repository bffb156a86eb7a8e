//! Point estimates, recovery metrics and plot-ready exports.
//!
//! CSV numbers are written with Rust's shortest round-trip formatting, so a
//! re-parsed file reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{embed, scale_to_dwr};
use crate::error::{Error, Result};
use crate::gibbs::{run_gibbs, McmcConfig};
use crate::model::init_hyperparams;
use crate::signal::{BitStream, SignalMatrix, WatermarkKey};
use crate::stats::Vector;
use crate::vb::{run_vb, VbConfig};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub solver: String,
    pub w_hat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub credible_level: f64,
    pub b_hat: BitStream,
    pub b_soft: Vec<f64>,
    pub pi_hat: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl PosteriorSummary {
    pub fn w_hat_vector(&self) -> Vector {
        Vector::from_vec(self.w_hat.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of misidentified bits.
    pub p_e: f64,
    /// `‖w − ŵ‖₂ / ‖w‖₂`.
    pub r_w: f64,
    /// Diagnostic: best of the raw labeling and the flipped one `(1 − b̂, −ŵ)`.
    pub p_e_flip: f64,
    /// Diagnostic: `r_w` under the labeling picked by `p_e_flip`.
    pub r_w_flip: f64,
}

fn error_rate(truth: &BitStream, est: &BitStream) -> f64 {
    let wrong = truth.iter().zip(est.iter()).filter(|(a, b)| a != b).count();
    wrong as f64 / truth.len() as f64
}

pub fn compute_metrics(
    truth_b: &BitStream,
    truth_w: &WatermarkKey,
    summary: &PosteriorSummary,
) -> Result<Metrics> {
    compute_metrics_raw(truth_b, truth_w, &summary.b_hat, &summary.w_hat_vector())
}

pub fn compute_metrics_raw(
    truth_b: &BitStream,
    truth_w: &WatermarkKey,
    b_hat: &BitStream,
    w_hat: &Vector,
) -> Result<Metrics> {
    if truth_b.len() != b_hat.len() || truth_w.d() != w_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth ({} bits, d={}) vs estimate ({} bits, d={})",
            truth_b.len(),
            truth_w.d(),
            b_hat.len(),
            w_hat.len()
        )));
    }
    let w = truth_w.vector();
    let norm = w.norm();
    if norm == 0.0 {
        return Err(Error::ZeroWatermark);
    }
    let p_e = error_rate(truth_b, b_hat);
    let r_w = (w - w_hat).norm() / norm;
    let p_e_alt = error_rate(truth_b, &b_hat.complement());
    let r_w_alt = (w + w_hat).norm() / norm;
    let (p_e_flip, r_w_flip) = if p_e_alt < p_e {
        (p_e_alt, r_w_alt)
    } else {
        (p_e, r_w)
    };
    Ok(Metrics {
        p_e,
        r_w,
        p_e_flip,
        r_w_flip,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub version: u32,
    pub summary: PosteriorSummary,
    pub metrics: Option<Metrics>,
}

pub fn export_summary(
    summary: &PosteriorSummary,
    metrics: Option<&Metrics>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = SummaryFile {
        version: SUMMARY_SCHEMA_VERSION,
        summary: summary.clone(),
        metrics: metrics.copied(),
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &file)?;
    Ok(())
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<SummaryFile> {
    let file: SummaryFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if file.version != SUMMARY_SCHEMA_VERSION {
        return Err(Error::InvalidParameter(format!(
            "summary schema version {} (expected {SUMMARY_SCHEMA_VERSION})",
            file.version
        )));
    }
    Ok(file)
}

fn writer(path: impl AsRef<Path>) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// Per-coordinate panel: `index, w_true, w_hat, ci_lo, ci_hi`.
/// `w_true` is left empty when no ground truth is available.
pub fn write_coords_csv(
    path: impl AsRef<Path>,
    summary: &PosteriorSummary,
    truth_w: Option<&WatermarkKey>,
) -> Result<()> {
    let mut wtr = writer(path)?;
    wtr.write_record(["index", "w_true", "w_hat", "ci_lo", "ci_hi"])?;
    for j in 0..summary.w_hat.len() {
        let truth = truth_w.map_or(String::new(), |w| w.vector()[j].to_string());
        wtr.write_record([
            j.to_string(),
            truth,
            summary.w_hat[j].to_string(),
            summary.ci_lo[j].to_string(),
            summary.ci_hi[j].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Bit panel: `i, b_true, b_hat, b_soft`.
pub fn write_bits_csv(
    path: impl AsRef<Path>,
    summary: &PosteriorSummary,
    truth_b: Option<&BitStream>,
) -> Result<()> {
    let mut wtr = writer(path)?;
    wtr.write_record(["i", "b_true", "b_hat", "b_soft"])?;
    for i in 0..summary.b_soft.len() {
        let truth = truth_b.map_or(String::new(), |b| u8::from(b.get(i)).to_string());
        wtr.write_record([
            i.to_string(),
            truth,
            u8::from(summary.b_hat.get(i)).to_string(),
            summary.b_soft[i].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One sweep record of the convergence monitor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElboPoint {
    pub iter: usize,
    pub elbo: f64,
    /// `|L_t − L_{t−1}| / |L_{t−1}|`; NaN for the first record.
    pub delta_rel: f64,
}

pub fn write_elbo_csv(path: impl AsRef<Path>, trace: &[ElboPoint]) -> Result<()> {
    let mut wtr = writer(path)?;
    wtr.write_record(["iter", "elbo", "delta_rel"])?;
    for p in trace {
        let delta = if p.delta_rel.is_nan() {
            String::new()
        } else {
            p.delta_rel.to_string()
        };
        wtr.write_record([p.iter.to_string(), p.elbo.to_string(), delta])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_elbo_csv(path: impl AsRef<Path>) -> Result<Vec<ElboPoint>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            let s = rec.get(k).unwrap_or("");
            if s.is_empty() {
                return Ok(f64::NAN);
            }
            s.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number {s:?} in ELBO trace")))
        };
        out.push(ElboPoint {
            iter: parse(0)? as usize,
            elbo: parse(1)?,
            delta_rel: parse(2)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Mcmc,
    Vb,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solver {
    Mcmc(McmcConfig),
    Vb(VbConfig),
}

impl Solver {
    pub fn kind(&self) -> SolverKind {
        match self {
            Solver::Mcmc(_) => SolverKind::Mcmc,
            Solver::Vb(_) => SolverKind::Vb,
        }
    }

    /// Run on watermarked data with hyperparameters derived at `dwr_db`.
    pub fn run(&self, y: &SignalMatrix, dwr_db: f64) -> Result<PosteriorSummary> {
        let h = init_hyperparams(y, dwr_db)?;
        match self {
            Solver::Mcmc(cfg) => run_gibbs(y, &h, cfg).map(|(_, s)| s),
            Solver::Vb(cfg) => run_vb(y, &h, cfg).map(|(_, s)| s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub dwr: f64,
    pub p_e: f64,
    pub r_w: f64,
    pub p_e_flip: f64,
    pub r_w_flip: f64,
    /// Unit direction of the embedded watermark at this point.
    #[serde(skip)]
    pub direction: Vec<f64>,
}

/// DWR sweep: one watermark draw, rescaled per point, embedded with the
/// same bits, attacked with the chosen solver. Points run in parallel;
/// the output order follows `dwr_list`.
pub fn dwr_sweep(
    hosts: &SignalMatrix,
    base_w: &WatermarkKey,
    bits: &BitStream,
    dwr_list: &[f64],
    solver: &Solver,
) -> Result<Vec<SweepPoint>> {
    if dwr_list.is_empty() {
        return Err(Error::InvalidParameter("empty DWR list".into()));
    }
    dwr_list
        .par_iter()
        .map(|&dwr| {
            let w = scale_to_dwr(hosts, base_w, dwr)?;
            let y = embed(hosts, &w, bits)?;
            let summary = solver.run(&y, dwr)?;
            let m = compute_metrics(bits, &w, &summary)?;
            Ok(SweepPoint {
                dwr,
                p_e: m.p_e,
                r_w: m.r_w,
                p_e_flip: m.p_e_flip,
                r_w_flip: m.r_w_flip,
                direction: w.vector().normalize().iter().copied().collect(),
            })
        })
        .collect()
}

pub fn write_sweep_csv(path: impl AsRef<Path>, points: &[SweepPoint]) -> Result<()> {
    let mut wtr = writer(path)?;
    wtr.write_record(["dwr", "p_e", "r_w", "p_e_flip", "r_w_flip"])?;
    for p in points {
        wtr.write_record([
            p.dwr.to_string(),
            p.p_e.to_string(),
            p.r_w.to_string(),
            p.p_e_flip.to_string(),
            p.r_w_flip.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// `{20, 22, …, 40}`
pub fn default_dwr_list() -> Vec<f64> {
    (0..=10).map(|k| 20.0 + 2.0 * k as f64).collect()
}

/// Linear-interpolation percentile of an unsorted sample.
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty sample");
    values.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    values[lo] + (values[hi] - values[lo]) * frac
}
