//! Exactness checks for the data pipeline, shared by the pipeline tests
//! and the acceptance report.
#![allow(dead_code)]

use rand::Rng;
use ssw_core::codec::{embed, measure_dwr, scale_to_dwr};
use ssw_core::datagen::{SynthConfig, SyntheticSet};
use ssw_core::gibbs::{run_gibbs, update_x, McmcConfig};
use ssw_core::ingest::{patchify, unpatchify, GrayImage};
use ssw_core::model::init_hyperparams;
use ssw_core::signal::{BitStream, SignalMatrix, WatermarkKey};
use ssw_core::stats::{RngState, Vector};
use ssw_core::vb::{run_vb, VbConfig};

pub fn random_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = RngState::new(seed);
    let pixels = (0..width * height)
        .map(|_| f64::from(rng.random_range(0u8..=255)))
        .collect();
    GrayImage::new(width, height, pixels)
}

/// patchify then unpatchify returns the identical pixel buffer.
pub fn patch_round_trip(img: &GrayImage) -> bool {
    let (m, layout) = patchify(img).unwrap();
    let back = unpatchify(&m, &layout).unwrap();
    back.pixels
        .iter()
        .zip(&img.pixels)
        .all(|(a, b)| a.to_bits() == b.to_bits())
}

/// Largest relative gap of `update_x(embed(x, w, b), w, b)` from `x`,
/// measured against the row scale.
pub fn embed_inversion_gap(x: &SignalMatrix, w: &WatermarkKey, bits: &BitStream) -> f64 {
    let y = embed(x, w, bits).unwrap();
    let back = update_x(&y, w.vector(), bits).unwrap();
    let scale = x
        .as_matrix()
        .amax()
        .max(w.vector().amax())
        .max(f64::MIN_POSITIVE);
    (back.as_matrix() - x.as_matrix()).amax() / scale
}

/// `|measure_dwr(scale_to_dwr(w, target)) − target|`
pub fn dwr_fixed_point_gap(x: &SignalMatrix, w: &WatermarkKey, target: f64) -> f64 {
    let scaled = scale_to_dwr(x, w, target).unwrap();
    (measure_dwr(x, &scaled).unwrap() - target).abs()
}

pub fn random_signal(n: usize, d: usize, seed: u64) -> (SignalMatrix, WatermarkKey, BitStream) {
    let mut rng = RngState::new(seed);
    let vals: Vec<f64> = (0..n * d).map(|_| rng.random_range(-50.0..50.0)).collect();
    let w = Vector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
    let bits = (0..n).map(|_| rng.random_bool(0.5)).collect();
    (
        SignalMatrix::from_row_major(n, d, &vals).unwrap(),
        WatermarkKey::new(w),
        bits,
    )
}

/// Generate, attack with both solvers twice, and compare bitwise.
pub fn full_run_deterministic(seed: u64) -> bool {
    let cfg = SynthConfig {
        n: 256,
        d: 8,
        seed,
        ..SynthConfig::default()
    };
    let a = SyntheticSet::generate(&cfg).unwrap();
    let b = SyntheticSet::generate(&cfg).unwrap();
    if a.hosts != b.hosts || a.watermark.vector() != b.watermark.vector() || a.bits != b.bits {
        return false;
    }
    let y = a.watermarked().unwrap();
    let h = init_hyperparams(&y, cfg.dwr_db).unwrap();
    let mcmc = McmcConfig {
        total_iters: 60,
        burn_in: 30,
        seed,
        ..McmcConfig::default()
    };
    let (t1, s1) = run_gibbs(&y, &h, &mcmc).unwrap();
    let (t2, s2) = run_gibbs(&y, &h, &mcmc).unwrap();
    let vb = VbConfig {
        seed,
        ..VbConfig::default()
    };
    let (e1, v1) = run_vb(&y, &h, &vb).unwrap();
    let (e2, v2) = run_vb(&y, &h, &vb).unwrap();
    let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    s1 == s2
        && bits(&t1.log_joint) == bits(&t2.log_joint)
        && v1 == v2
        && bits(&e1.iter().map(|p| p.elbo).collect::<Vec<_>>())
            == bits(&e2.iter().map(|p| p.elbo).collect::<Vec<_>>())
}
