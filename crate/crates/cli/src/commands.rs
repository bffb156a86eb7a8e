use std::path::{Path, PathBuf};

use ssw_core::codec::{embed, scale_to_dwr};
use ssw_core::datagen::{draw_raw_watermark, generate_bits, zero_mean, SynthConfig, SyntheticSet};
use ssw_core::gibbs::{run_gibbs, McmcConfig};
use ssw_core::ingest::{decode_pgm, patchify, unpatchify, write_pgm, GrayImage, PatchLayout};
use ssw_core::io::{
    decode_matrix, read_bits, read_matrix, read_matrix_csv, read_watermark, write_bits,
    write_matrix, write_matrix_csv, write_watermark,
};
use ssw_core::model::init_hyperparams;
use ssw_core::report::{
    compute_metrics, dwr_sweep, export_summary, read_summary, write_bits_csv, write_coords_csv,
    write_elbo_csv, write_sweep_csv, PosteriorSummary, Solver,
};
use ssw_core::signal::{BitStream, SignalMatrix, WatermarkKey};
use ssw_core::vb::{run_vb, VbConfig};
use ssw_core::Result;

use crate::args::{
    AttackArgs, Command, EmbedArgs, McmcArgs, ReportArgs, RerunArgs, SolverChoice, SweepArgs,
    SynthArgs, VbArgs,
};
use crate::error::{CliError, CliResult, FileContext};
use crate::manifest::RunManifest;

pub const WATERMARKED: &str = "watermarked.bin";
pub const HOSTS: &str = "hosts.bin";
pub const TRUTH_W: &str = "truth_w.bin";
pub const TRUTH_BITS: &str = "truth_bits.bin";
pub const SUMMARY: &str = "summary.json";

/// Collects the files a command writes, relative to its output directory.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn matrix(&mut self, m: &SignalMatrix, name: &str, csv: bool) -> Result<()> {
        write_matrix(m, self.path(name))?;
        if csv {
            write_matrix_csv(m, self.path(&name.replace(".bin", ".csv")))?;
        }
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, value: &T, name: &str) -> Result<()> {
        let file = std::fs::File::create(self.path(name))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
        Ok(())
    }

    fn truth(&mut self, w: &WatermarkKey, bits: &BitStream) -> Result<()> {
        write_watermark(w, self.path(TRUTH_W))?;
        write_bits(bits, self.path(TRUTH_BITS))
    }
}

/// Runs a command and returns the artifacts it wrote.
pub fn execute(cmd: &Command) -> CliResult<Vec<String>> {
    validate(cmd)?;
    let mut out = Outputs::new(cmd.out_dir()).for_file("--out-dir", cmd.out_dir())?;
    match cmd {
        Command::Synth(a) => synth(a, &mut out)?,
        Command::Embed(a) => embed_cmd(a, &mut out)?,
        Command::AttackMcmc(a) => attack_mcmc(a, &mut out)?,
        Command::AttackVb(a) => attack_vb(a, &mut out)?,
        Command::Sweep(a) => sweep(a, &mut out)?,
        Command::Report(a) => report(a, &mut out)?,
        Command::Rerun(a) => return rerun(a),
    }
    Ok(out.written)
}

fn check(ok: bool, flag: &'static str, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(flag, msg()))
    }
}

fn check_dwr(dwr: f64) -> CliResult<()> {
    check(dwr.is_finite(), "--dwr", || format!("{dwr} is not finite"))
}

fn check_mcmc(iters: usize, burnin: usize, thin: usize) -> CliResult<()> {
    check(iters >= 1, "--iters", || "must be at least 1".into())?;
    check(burnin < iters, "--burnin", || {
        format!("{burnin} must be below --iters {iters}")
    })?;
    check(thin >= 1, "--thin", || "must be at least 1".into())
}

fn check_vb(tol: f64, max_iters: usize) -> CliResult<()> {
    check(tol.is_finite() && tol > 0.0, "--tol", || {
        format!("{tol} must be positive")
    })?;
    check(max_iters >= 1, "--max-iters", || {
        "must be at least 1".into()
    })
}

fn check_attack(a: &AttackArgs) -> CliResult<()> {
    check_dwr(a.dwr)?;
    check(a.level > 0.0 && a.level < 1.0, "--level", || {
        format!("{} outside (0, 1)", a.level)
    })
}

/// Flag checks that need no file access.
fn validate(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Synth(a) => {
            check(a.n >= 1, "--n", || "must be at least 1".into())?;
            check(a.d >= 1, "--d", || "must be at least 1".into())?;
            check_dwr(a.dwr)
        }
        Command::Embed(a) => check_dwr(a.dwr),
        Command::AttackMcmc(a) => {
            check_attack(&a.attack)?;
            check_mcmc(a.iters, a.burnin, a.thin)
        }
        Command::AttackVb(a) => {
            check_attack(&a.attack)?;
            check_vb(a.tol, a.max_iters)
        }
        Command::Sweep(a) => {
            check(a.n >= 1, "--n", || "must be at least 1".into())?;
            check(a.d >= 1, "--d", || "must be at least 1".into())?;
            match a.solver {
                SolverChoice::Vb => check_vb(a.tol, a.max_iters),
                SolverChoice::Mcmc => check_mcmc(a.iters, a.burnin, a.thin),
            }
        }
        Command::Report(_) | Command::Rerun(_) => Ok(()),
    }
}

/// Replace input paths by absolute ones so a manifest replays from any
/// working directory. Fails on inputs that do not exist.
pub fn resolve_inputs(cmd: &mut Command) -> CliResult<()> {
    fn resolve(flag: &'static str, p: &mut PathBuf) -> CliResult<()> {
        *p = std::fs::canonicalize(&*p).map_err(|e| CliError::File {
            flag,
            path: p.display().to_string(),
            source: e.into(),
        })?;
        Ok(())
    }
    fn resolve_attack(a: &mut AttackArgs) -> CliResult<()> {
        resolve("--in", &mut a.input)?;
        if let Some(p) = a.truth_w.as_mut() {
            resolve("--truth-w", p)?;
        }
        if let Some(p) = a.truth_bits.as_mut() {
            resolve("--truth-bits", p)?;
        }
        Ok(())
    }
    match cmd {
        Command::Synth(_) => Ok(()),
        Command::Embed(a) => resolve("--in", &mut a.input),
        Command::AttackMcmc(a) => resolve_attack(&mut a.attack),
        Command::AttackVb(a) => resolve_attack(&mut a.attack),
        Command::Sweep(a) => a.input.as_mut().map_or(Ok(()), |p| resolve("--in", p)),
        Command::Report(a) => {
            resolve("--in", &mut a.input)?;
            resolve("--truth-w", &mut a.truth_w)?;
            resolve("--truth-bits", &mut a.truth_bits)
        }
        Command::Rerun(a) => resolve("--in", &mut a.input),
    }
}

fn synth(a: &SynthArgs, out: &mut Outputs) -> CliResult<()> {
    let set = SyntheticSet::generate(&SynthConfig {
        n: a.n,
        d: a.d,
        dwr_db: a.dwr,
        seed: a.seed,
        ..SynthConfig::default()
    })?;
    out.matrix(&set.hosts, HOSTS, a.csv)?;
    out.matrix(&set.watermarked()?, WATERMARKED, a.csv)?;
    Ok(out.truth(&set.watermark, &set.bits)?)
}

enum HostInput {
    Image(GrayImage, PatchLayout),
    Matrix,
}

/// Reads hosts from a binary PGM, a binary matrix, or a headerless CSV.
fn read_hosts(path: &Path) -> Result<(SignalMatrix, HostInput)> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"P5") {
        let img = decode_pgm(&bytes)?;
        let (hosts, layout) = patchify(&img)?;
        Ok((hosts, HostInput::Image(img, layout)))
    } else if path.extension().is_some_and(|e| e == "csv") {
        Ok((read_matrix_csv(path)?, HostInput::Matrix))
    } else {
        Ok((decode_matrix(&bytes)?, HostInput::Matrix))
    }
}

/// Zero-mean watermark and fair bits for the given hosts, drawn from `seed`.
fn draw_message(hosts: &SignalMatrix, dwr: f64, seed: u64) -> Result<(WatermarkKey, BitStream)> {
    let cfg = SynthConfig {
        n: hosts.n(),
        d: hosts.d(),
        dwr_db: dwr,
        seed,
        ..SynthConfig::default()
    };
    let rng = cfg.rng();
    let raw = WatermarkKey::new(zero_mean(&draw_raw_watermark(cfg.d, &rng)?));
    let w = scale_to_dwr(hosts, &raw, dwr)?;
    Ok((w, generate_bits(&cfg, &rng)?))
}

fn embed_cmd(a: &EmbedArgs, out: &mut Outputs) -> CliResult<()> {
    let (hosts, kind) = read_hosts(&a.input).for_file("--in", &a.input)?;
    let (w, bits) = draw_message(&hosts, a.dwr, a.seed)?;
    let y = embed(&hosts, &w, &bits)?;
    out.matrix(&y, WATERMARKED, a.csv)?;
    out.truth(&w, &bits)?;
    if let HostInput::Image(img, layout) = kind {
        out.json(&layout, "layout.json")?;
        let marked = unpatchify(&y, &layout)?;
        write_pgm(&marked, out.path("watermarked.pgm"))?;
        write_pgm(
            &difference_image(&marked, &img),
            out.path("watermark_diff.pgm"),
        )?;
    }
    Ok(())
}

/// `marked − original`, centred on mid-grey and stretched to fill the range.
fn difference_image(marked: &GrayImage, original: &GrayImage) -> GrayImage {
    let diff: Vec<f64> = marked
        .pixels
        .iter()
        .zip(&original.pixels)
        .map(|(a, b)| a - b)
        .collect();
    let peak = diff.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { 127.0 / peak } else { 0.0 };
    GrayImage::new(
        marked.width,
        marked.height,
        diff.iter().map(|v| 128.0 + gain * v).collect(),
    )
}

struct Truth {
    w: Option<WatermarkKey>,
    bits: Option<BitStream>,
}

fn read_truth(w: Option<&PathBuf>, bits: Option<&PathBuf>) -> CliResult<Truth> {
    Ok(Truth {
        w: w.map(|p| read_watermark(p).for_file("--truth-w", p))
            .transpose()?,
        bits: bits
            .map(|p| read_bits(p).for_file("--truth-bits", p))
            .transpose()?,
    })
}

/// summary.json plus the coordinate and bit panels; metrics when both
/// truth files are given.
fn write_attack_outputs(
    summary: &PosteriorSummary,
    truth: &Truth,
    out: &mut Outputs,
) -> Result<()> {
    let metrics = match (&truth.w, &truth.bits) {
        (Some(w), Some(b)) => Some(compute_metrics(b, w, summary)?),
        _ => None,
    };
    export_summary(summary, metrics.as_ref(), out.path(SUMMARY))?;
    write_coords_csv(out.path("coords.csv"), summary, truth.w.as_ref())?;
    write_bits_csv(out.path("bits.csv"), summary, truth.bits.as_ref())
}

fn load_attack_input(a: &AttackArgs) -> CliResult<(SignalMatrix, Truth)> {
    let y = read_matrix(&a.input).for_file("--in", &a.input)?;
    let truth = read_truth(a.truth_w.as_ref(), a.truth_bits.as_ref())?;
    Ok((y, truth))
}

fn mcmc_config(iters: usize, burnin: usize, thin: usize, seed: u64, level: f64) -> McmcConfig {
    McmcConfig {
        total_iters: iters,
        burn_in: burnin,
        thinning: thin,
        seed,
        credible_level: level,
    }
}

fn vb_config(tol: f64, max_iters: usize, seed: u64, level: f64) -> VbConfig {
    VbConfig {
        max_iters,
        elbo_rel_tol: tol,
        seed,
        credible_level: level,
    }
}

fn attack_mcmc(a: &McmcArgs, out: &mut Outputs) -> CliResult<()> {
    let cfg = mcmc_config(a.iters, a.burnin, a.thin, a.attack.seed, a.attack.level);
    let (y, truth) = load_attack_input(&a.attack)?;
    let h = init_hyperparams(&y, a.attack.dwr)?;
    let (trace, summary) = run_gibbs(&y, &h, &cfg)?;
    trace.write_csv(out.path("trace.csv"))?;
    trace.write_bit_freq_csv(out.path("bit_freq.csv"))?;
    Ok(write_attack_outputs(&summary, &truth, out)?)
}

fn attack_vb(a: &VbArgs, out: &mut Outputs) -> CliResult<()> {
    let cfg = vb_config(a.tol, a.max_iters, a.attack.seed, a.attack.level);
    let (y, truth) = load_attack_input(&a.attack)?;
    let h = init_hyperparams(&y, a.attack.dwr)?;
    let (trace, summary) = run_vb(&y, &h, &cfg)?;
    write_elbo_csv(out.path("elbo.csv"), &trace)?;
    Ok(write_attack_outputs(&summary, &truth, out)?)
}

fn sweep(a: &SweepArgs, out: &mut Outputs) -> CliResult<()> {
    let solver = match a.solver {
        SolverChoice::Vb => Solver::Vb(vb_config(a.tol, a.max_iters, a.seed, 0.95)),
        SolverChoice::Mcmc => Solver::Mcmc(mcmc_config(a.iters, a.burnin, a.thin, a.seed, 0.95)),
    };
    let hosts = match &a.input {
        Some(path) => read_hosts(path).for_file("--in", path)?.0,
        None => {
            let cfg = SynthConfig {
                n: a.n,
                d: a.d,
                seed: a.seed,
                ..SynthConfig::default()
            };
            ssw_core::datagen::generate_hosts(&cfg, &cfg.rng())?
        }
    };
    // The direction is fixed once; each point only rescales it.
    let (w, bits) = draw_message(&hosts, a.dwr_list.0[0], a.seed)?;
    let points = dwr_sweep(&hosts, &w, &bits, &a.dwr_list.0, &solver)?;
    Ok(write_sweep_csv(out.path("sweep.csv"), &points)?)
}

fn report(a: &ReportArgs, out: &mut Outputs) -> CliResult<()> {
    let path = a.input.join(SUMMARY);
    let stored = read_summary(&path).for_file("--in", &path)?;
    let truth = read_truth(Some(&a.truth_w), Some(&a.truth_bits))?;
    let (w, bits) = (truth.w.as_ref().unwrap(), truth.bits.as_ref().unwrap());
    let metrics = compute_metrics(bits, w, &stored.summary)?;
    out.json(&metrics, "metrics.json")?;
    Ok(write_attack_outputs(&stored.summary, &truth, out)?)
}

/// The command a manifest recorded, redirected to `out_dir`.
pub fn replayed_command(a: &RerunArgs) -> CliResult<Command> {
    let manifest = RunManifest::read(&a.input).for_file("--in", &a.input)?;
    let mut cmd = manifest.command;
    cmd.set_out_dir(a.out_dir.clone());
    Ok(cmd)
}

fn rerun(a: &RerunArgs) -> CliResult<Vec<String>> {
    execute(&replayed_command(a)?)
}
