//! Cholesky-based matrix primitives.
//!
//! Inverses, log-determinants and solves all go through a lower-triangular
//! factor. Near-singular inputs get an additive `eps * tr(A)/d * I` jitter,
//! escalating `eps` from 1e-12 to 1e-6 before giving up.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const JITTER_LADDER: [f64; 7] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
    jitter: f64,
}

impl Cholesky {
    /// Factor `a = L Lᵀ`. Only the lower triangle of `a` is read.
    pub fn new(a: &Matrix) -> Result<Self> {
        let d = a.nrows();
        if d != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cholesky of non-square {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        if let Some(l) = factor(a) {
            return Ok(Cholesky { l, jitter: 0.0 });
        }
        let scale = a.trace() / d as f64;
        if !(scale > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        for eps in JITTER_LADDER {
            let jitter = eps * scale;
            let mut shifted = a.clone();
            for i in 0..d {
                shifted[(i, i)] += jitter;
            }
            if let Some(l) = factor(&shifted) {
                return Ok(Cholesky { l, jitter });
            }
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn into_l(self) -> Matrix {
        self.l
    }

    /// Diagonal jitter that was added to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// `L⁻¹ b`
    pub fn whiten(&self, b: &Vector) -> Vector {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `A⁻¹ b`
    pub fn solve(&self, b: &Vector) -> Vector {
        let z = self.whiten(b);
        self.l
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `A⁻¹ B`
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let z = self
            .l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn inverse(&self) -> Matrix {
        let d = self.dim();
        symmetrize(self.solve_matrix(&Matrix::identity(d, d)))
    }

    /// `xᵀ A⁻¹ x`
    pub fn quad_form(&self, x: &Vector) -> f64 {
        self.whiten(x).norm_squared()
    }

    pub fn reconstruct(&self) -> Matrix {
        &self.l * self.l.transpose()
    }
}

fn factor(a: &Matrix) -> Option<Matrix> {
    let chol = nalgebra::Cholesky::new(a.clone())?;
    let l = chol.unpack();
    if l.diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
        Some(l)
    } else {
        None
    }
}

/// `(A + Aᵀ) / 2`
pub fn symmetrize(mut a: Matrix) -> Matrix {
    let d = a.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Relative Frobenius distance `‖a − b‖_F / ‖b‖_F`.
pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}

/// Per-row quadratic forms `r_iᵀ P r_i` for the rows of `rows` (n×d).
pub fn row_quad_forms(rows: &Matrix, precision: &Matrix) -> Vec<f64> {
    let rp = rows * precision;
    rp.component_mul(rows).row_iter().map(|r| r.sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngState;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identity_factor() {
        let c = Cholesky::new(&Matrix::identity(5, 5)).unwrap();
        assert_eq!(c.l(), &Matrix::identity(5, 5));
        assert_eq!(c.jitter(), 0.0);
    }

    #[test]
    fn diagonal_factor() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]));
        let c = Cholesky::new(&a).unwrap();
        assert_eq!(c.l()[(0, 0)], 2.0);
        assert_eq!(c.l()[(1, 1)], 3.0);
        assert_eq!(c.l()[(1, 0)], 0.0);
        assert!((c.ln_det() - 36f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn random_spd_reconstructs() {
        let mut rng = RngState::new(3);
        for d in [1, 2, 5, 16, 64] {
            let b = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
            let a = &b * b.transpose() + Matrix::identity(d, d);
            let c = Cholesky::new(&a).unwrap();
            assert!(rel_frobenius(&c.reconstruct(), &a) < 1e-8);
            let inv = c.inverse();
            assert!(rel_frobenius(&(&a * &inv), &Matrix::identity(d, d)) < 1e-8);
        }
    }

    #[test]
    fn singular_gets_jitter() {
        // rank one
        let v = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let a = &v * v.transpose();
        let c = Cholesky::new(&a).unwrap();
        assert!(c.jitter() > 0.0);
        assert!(c.jitter() <= 1e-6 * a.trace() / 3.0);
    }

    #[test]
    fn indefinite_fails() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(Cholesky::new(&a), Err(Error::NotPositiveDefinite)));
        let nan = Matrix::from_element(2, 2, f64::NAN);
        assert!(matches!(
            Cholesky::new(&nan),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn quad_forms_match_solve() {
        let mut rng = RngState::new(11);
        let d = 4;
        let b = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let a = &b * b.transpose() + Matrix::identity(d, d);
        let c = Cholesky::new(&a).unwrap();
        let rows = Matrix::from_fn(7, d, |_, _| StandardNormal.sample(&mut rng));
        let q = row_quad_forms(&rows, &c.inverse());
        for (i, qi) in q.iter().enumerate() {
            let r = rows.row(i).transpose();
            assert!((qi - c.quad_form(&r)).abs() < 1e-10 * qi.abs().max(1.0));
        }
    }
}
