//! Scalar oracles for the Gibbs conditionals: each conditional is compared
//! against prior × likelihood normalized by grid quadrature, using density
//! code written here rather than the crate's own.
#![allow(dead_code)]

use ssw_core::gibbs::{
    bit_probabilities, m_v_posterior, mu_sigma_posterior, pi_posterior, update_b, w_posterior,
};
use ssw_core::model::{Hyperparams, ModelState, NiwParams};
use ssw_core::signal::{BitStream, SignalMatrix};
use ssw_core::stats::{ln_gamma, Matrix, RngState, Vector};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (x - mean).powi(2) / var)
}

/// Scalar inverse-Wishart, i.e. inverse-gamma(dof/2, scale/2).
fn ln_inv_wishart(s: f64, dof: f64, scale: f64) -> f64 {
    let a = 0.5 * dof;
    a * (0.5 * scale).ln() - ln_gamma(a) - (a + 1.0) * s.ln() - 0.5 * scale / s
}

fn ln_niw(mu: f64, s: f64, p: &NiwParams) -> f64 {
    ln_normal(mu, p.mean[0], s / p.kappa) + ln_inv_wishart(s, p.dof, p.scale[(0, 0)])
}

pub fn column(values: &[f64]) -> SignalMatrix {
    SignalMatrix::from_row_major(values.len(), 1, values).unwrap()
}

pub fn v1(x: f64) -> Vector {
    Vector::from_vec(vec![x])
}

pub fn m1(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

pub fn hyper() -> Hyperparams {
    Hyperparams {
        mu0: v1(0.2),
        sigma0: m1(1.5),
        omega0: 2.0,
        m0: v1(-0.3),
        v0: m1(0.8),
        a_pi: 1.5,
        b_pi: 2.5,
    }
}

fn grid(lo: f64, hi: f64, steps: usize) -> (Vec<f64>, f64) {
    let dx = (hi - lo) / steps as f64;
    ((0..=steps).map(|k| lo + k as f64 * dx).collect(), dx)
}

fn trapezoid_weight(k: usize, steps: usize) -> f64 {
    if k == 0 || k == steps {
        0.5
    } else {
        1.0
    }
}

/// Sup-norm gap between a grid-normalized unnormalized log density over
/// `(location, variance)` and a closed-form log density. Variance is
/// gridded in log space.
fn niw_gap(unnorm: impl Fn(f64, f64) -> f64, closed: impl Fn(f64, f64) -> f64, center: f64) -> f64 {
    let (ts, dt) = grid((1e-3f64).ln(), (1e4f64).ln(), 2000);
    let (mus, dmu) = grid(center - 40.0, center + 40.0, 2000);
    let mut un = vec![0.0; ts.len() * mus.len()];
    let mut z = 0.0;
    for (a, &t) in ts.iter().enumerate() {
        let s = t.exp();
        for (b, &mu) in mus.iter().enumerate() {
            let v = unnorm(mu, s).exp();
            un[a * mus.len() + b] = v;
            z += trapezoid_weight(a, ts.len() - 1) * trapezoid_weight(b, mus.len() - 1) * v * s;
        }
    }
    z *= dt * dmu;
    let mut gap: f64 = 0.0;
    for (a, &t) in ts.iter().enumerate() {
        for (b, &mu) in mus.iter().enumerate() {
            let s = t.exp();
            gap = gap.max((un[a * mus.len() + b] / z - closed(mu, s).exp()).abs());
        }
    }
    gap
}

/// Worst sup-norm gap of the `(μ, Σ)` conditional over n = 1, 2, 3.
pub fn host_conditional_gap() -> f64 {
    let h = hyper();
    let mut worst: f64 = 0.0;
    for xs in [vec![0.3], vec![0.3, 1.2], vec![0.3, 1.2, -0.5]] {
        let post = mu_sigma_posterior(&column(&xs), &h);
        let unnorm = |mu: f64, s: f64| {
            xs.iter().map(|&x| ln_normal(x, mu, s)).sum::<f64>()
                + ln_normal(mu, h.mu0[0], s)
                + ln_inv_wishart(s, h.omega0, h.sigma0[(0, 0)])
        };
        worst = worst.max(niw_gap(unnorm, |mu, s| ln_niw(mu, s, &post), post.mean[0]));
    }
    worst
}

/// Worst sup-norm gap of the `(m, V)` conditional over three values of w.
pub fn watermark_parameter_gap() -> f64 {
    let h = hyper();
    let mut worst: f64 = 0.0;
    for w in [-0.3, 1.7, -2.4] {
        let post = m_v_posterior(&v1(w), &h);
        let unnorm = |m: f64, v: f64| {
            ln_normal(w, m, v)
                + ln_normal(m, h.m0[0], v)
                + ln_inv_wishart(v, h.omega0, h.v0[(0, 0)])
        };
        worst = worst.max(niw_gap(unnorm, |m, v| ln_niw(m, v, &post), post.mean[0]));
    }
    worst
}

pub fn state(y: &SignalMatrix, bits: &[bool]) -> ModelState {
    let bits: BitStream = bits.iter().copied().collect();
    ModelState {
        mu: v1(0.4),
        sigma: m1(0.9),
        m: v1(1.1),
        v: m1(0.6),
        w: v1(1.0),
        x: ssw_core::gibbs::update_x(y, &v1(1.0), &bits).unwrap(),
        bits,
        pi: 0.35,
    }
}

/// Worst sup-norm gap of the w conditional over several bit patterns.
pub fn watermark_gap() -> f64 {
    let y = column(&[1.9, -0.2, 2.6]);
    let mut worst: f64 = 0.0;
    for bits in [
        [false, false, false],
        [true, false, false],
        [true, false, true],
        [true, true, true],
    ] {
        let st = state(&y, &bits);
        let post = w_posterior(&y, &st).unwrap();
        let (mean, var) = (post.mean[0], post.covariance()[(0, 0)]);
        let unnorm = |w: f64| {
            let lik: f64 = bits
                .iter()
                .zip(y.as_matrix().iter())
                .filter(|(b, _)| **b)
                .map(|(_, &yi)| ln_normal(yi - w, st.mu[0], st.sigma[(0, 0)]))
                .sum();
            lik + ln_normal(w, st.m[0], st.v[(0, 0)])
        };
        let steps = 40_000;
        let (ws, dw) = grid(-30.0, 30.0, steps);
        let vals: Vec<f64> = ws.iter().map(|&w| unnorm(w).exp()).collect();
        let z: f64 = vals
            .iter()
            .enumerate()
            .map(|(k, v)| trapezoid_weight(k, steps) * v)
            .sum::<f64>()
            * dw;
        let gap = ws
            .iter()
            .zip(&vals)
            .map(|(&w, v)| (v / z - ln_normal(w, mean, var).exp()).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    worst
}

/// Worst gap between the bit conditional and prior × marginal likelihood,
/// with w integrated out under N(m, V) by quadrature.
pub fn bit_gap() -> f64 {
    let y = column(&[1.9, -0.2, 0.7]);
    let st = state(&y, &[false, true, false]);
    let probs = bit_probabilities(&y, &st).unwrap();
    let steps = 40_000;
    let (ws, dw) = grid(-30.0, 30.0, steps);
    let mut worst: f64 = 0.0;
    for (i, &yi) in [1.9, -0.2, 0.7].iter().enumerate() {
        let on: f64 = ws
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                trapezoid_weight(k, steps)
                    * (ln_normal(yi - w, st.mu[0], st.sigma[(0, 0)])
                        + ln_normal(w, st.m[0], st.v[(0, 0)]))
                    .exp()
            })
            .sum::<f64>()
            * dw;
        let on = st.pi * on;
        let off = (1.0 - st.pi) * ln_normal(yi, st.mu[0], st.sigma[(0, 0)]).exp();
        let p = on / (on + off);
        worst = worst.max((probs[i] - p).abs());
    }
    worst
}

/// Worst sup-norm gap of the π conditional.
pub fn pi_gap() -> f64 {
    let h = hyper();
    let mut worst: f64 = 0.0;
    for bits in [vec![true], vec![true, false], vec![false, false, true]] {
        let b: BitStream = bits.iter().copied().collect();
        let (a, bb) = pi_posterior(&b, &h);
        let ones = b.ones() as f64;
        let zeros = b.len() as f64 - ones;
        let unnorm = |p: f64| {
            ones * p.ln()
                + zeros * (1.0 - p).ln()
                + (h.a_pi - 1.0) * p.ln()
                + (h.b_pi - 1.0) * (1.0 - p).ln()
        };
        let steps = 200_000;
        let (ps, dp) = grid(0.0, 1.0, steps);
        let vals: Vec<f64> = ps
            .iter()
            .map(|&p| {
                if p > 0.0 && p < 1.0 {
                    unnorm(p).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let z: f64 = vals
            .iter()
            .enumerate()
            .map(|(k, v)| trapezoid_weight(k, steps) * v)
            .sum::<f64>()
            * dp;
        let ln_b = ln_gamma(a) + ln_gamma(bb) - ln_gamma(a + bb);
        let gap = ps
            .iter()
            .zip(&vals)
            .filter(|(&p, _)| p > 0.0 && p < 1.0)
            .map(|(&p, v)| {
                (v / z - ((a - 1.0) * p.ln() + (bb - 1.0) * (1.0 - p).ln() - ln_b).exp()).abs()
            })
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    worst
}

/// Largest deviation, in Monte Carlo standard errors, between bit-draw
/// frequencies and the enumerated target over all 2⁶ states.
pub fn enumeration_max_z(sweeps: usize, seed: u64) -> f64 {
    // Six rows, every other block frozen. The target over 2⁶ bitstreams is
    // enumerated from the per-row prior × marginal likelihood.
    let ys = [1.9, -0.2, 0.7, 1.1, 2.8, 0.1];
    let y = column(&ys);
    let mut st = state(&y, &[false; 6]);
    st.v = m1(0.4);
    let (mu, s, m, v, pi) = (st.mu[0], st.sigma[(0, 0)], st.m[0], st.v[(0, 0)], st.pi);
    let weight = |code: usize| -> f64 {
        (0..6)
            .map(|i| {
                if code >> i & 1 == 1 {
                    pi.ln() + ln_normal(ys[i], mu + m, s + v)
                } else {
                    (1.0 - pi).ln() + ln_normal(ys[i], mu, s)
                }
            })
            .sum::<f64>()
            .exp()
    };
    let total: f64 = (0..64).map(weight).sum();
    let target: Vec<f64> = (0..64).map(|c| weight(c) / total).collect();

    let mut counts = [0usize; 64];
    let mut rng = RngState::new(seed);
    for _ in 0..sweeps {
        st.bits = update_b(&y, &st, &mut rng).unwrap();
        let code = st
            .bits
            .iter()
            .enumerate()
            .fold(0, |c, (i, b)| c | (usize::from(b) << i));
        counts[code] += 1;
    }
    (0..64)
        .map(|code| {
            let p = target[code];
            let freq = counts[code] as f64 / sweeps as f64;
            (freq - p).abs() / (p * (1.0 - p) / sweeps as f64).sqrt()
        })
        .fold(0.0, f64::max)
}
