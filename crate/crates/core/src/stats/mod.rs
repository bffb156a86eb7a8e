//! Samplers, densities and matrix primitives used by both attack solvers.

pub mod dist;
pub mod linalg;
pub mod rng;
pub mod special;

pub use dist::{
    bernoulli_sample, beta_logpdf, beta_sample, invwishart_logpdf, invwishart_sample, mvn_logpdf,
    mvn_sample, wishart_sample,
};
pub use linalg::{Cholesky, Matrix, Vector};
pub use rng::RngState;
pub use special::{digamma, ln_gamma, ln_multigamma};
