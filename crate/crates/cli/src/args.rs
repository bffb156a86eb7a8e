use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "ssw",
    version,
    about = "Bayesian attacks on repetitive spread-spectrum watermarks"
)]
pub struct Cli {
    /// Cap on worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Draw synthetic hosts, a watermark and message bits.
    Synth(SynthArgs),
    /// Watermark a PGM image or a host matrix.
    Embed(EmbedArgs),
    /// Gibbs sampler attack on a watermarked matrix.
    AttackMcmc(McmcArgs),
    /// Variational Bayes attack on a watermarked matrix.
    AttackVb(VbArgs),
    /// Attack the same hosts across a list of DWR values.
    Sweep(SweepArgs),
    /// Recompute metrics and exports from a stored attack directory.
    Report(ReportArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Embed(_) => "embed",
            Command::AttackMcmc(_) => "attack-mcmc",
            Command::AttackVb(_) => "attack-vb",
            Command::Sweep(_) => "sweep",
            Command::Report(_) => "report",
            Command::Rerun(_) => "rerun",
        }
    }

    pub fn out_dir(&self) -> &PathBuf {
        match self {
            Command::Synth(a) => &a.out_dir,
            Command::Embed(a) => &a.out_dir,
            Command::AttackMcmc(a) => &a.attack.out_dir,
            Command::AttackVb(a) => &a.attack.out_dir,
            Command::Sweep(a) => &a.out_dir,
            Command::Report(a) => &a.out_dir,
            Command::Rerun(a) => &a.out_dir,
        }
    }

    pub fn set_out_dir(&mut self, dir: PathBuf) {
        match self {
            Command::Synth(a) => a.out_dir = dir,
            Command::Embed(a) => a.out_dir = dir,
            Command::AttackMcmc(a) => a.attack.out_dir = dir,
            Command::AttackVb(a) => a.attack.out_dir = dir,
            Command::Sweep(a) => a.out_dir = dir,
            Command::Report(a) => a.out_dir = dir,
            Command::Rerun(a) => a.out_dir = dir,
        }
    }

    /// Seed the run depends on, if any.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Synth(a) => Some(a.seed),
            Command::Embed(a) => Some(a.seed),
            Command::AttackMcmc(a) => Some(a.attack.seed),
            Command::AttackVb(a) => Some(a.attack.seed),
            Command::Sweep(a) => Some(a.seed),
            Command::Report(_) | Command::Rerun(_) => None,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    /// Document-to-watermark ratio in dB.
    #[arg(long, default_value_t = 30.0)]
    pub dwr: f64,
    #[arg(long, env = "SSW_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Also write CSV copies of every matrix.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct EmbedArgs {
    /// PGM image or host matrix.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub dwr: f64,
    #[arg(long, env = "SSW_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Flags shared by both attacks.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct AttackArgs {
    /// Watermarked matrix.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// DWR assumed by the watermark prior.
    #[arg(long, default_value_t = 30.0)]
    pub dwr: f64,
    #[arg(long, env = "SSW_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Credible level of the per-coordinate intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub truth_w: Option<PathBuf>,
    #[arg(long)]
    pub truth_bits: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct McmcArgs {
    #[command(flatten)]
    pub attack: AttackArgs,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct VbArgs {
    #[command(flatten)]
    pub attack: AttackArgs,
    /// Relative ELBO change that ends the run.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Vb,
    Mcmc,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Host image or matrix; synthetic hosts are drawn when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, env = "SSW_SEED", default_value_t = 0)]
    pub seed: u64,
    /// `start:step:stop` or a comma-separated list.
    #[arg(long, default_value = "20:2:40")]
    pub dwr_list: DwrList,
    #[arg(long, value_enum, default_value_t = SolverChoice::Vb)]
    pub solver: SolverChoice,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Output directory of an attack run.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub truth_w: PathBuf,
    #[arg(long)]
    pub truth_bits: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// A manifest.json written by an earlier run.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwrList(pub Vec<f64>);

impl FromStr for DwrList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a finite number: {t:?}"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [start, step, stop] => {
                let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
                if step <= 0.0 || stop < start {
                    return Err(format!("empty or unbounded range {s:?}"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=count).map(|k| start + step * k as f64).collect()
            }
            [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
            _ => {
                return Err(format!(
                    "expected start:step:stop or a comma list, got {s:?}"
                ))
            }
        };
        if values.is_empty() {
            return Err("empty DWR list".into());
        }
        Ok(DwrList(values))
    }
}
