//! Shared data containers: signal matrices, bitstreams and watermark keys.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{Matrix, Vector};

/// `n` signal vectors of dimension `d`, one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalMatrix(Matrix);

impl SignalMatrix {
    pub fn new(data: Matrix) -> Self {
        SignalMatrix(data)
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        SignalMatrix(DMatrix::zeros(n, d))
    }

    /// Build from row-major values.
    pub fn from_row_major(n: usize, d: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{d} matrix",
                values.len()
            )));
        }
        Ok(SignalMatrix(DMatrix::from_row_slice(n, d, values)))
    }

    pub fn from_rows(rows: &[Vector]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(SignalMatrix(DMatrix::from_fn(rows.len(), d, |i, j| {
            rows[i][j]
        })))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> Vector {
        self.0.row(i).transpose()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn as_matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.d());
        for i in 0..self.n() {
            out.extend(self.0.row(i).iter());
        }
        out
    }

    /// Column means `(1/n) Σ_i row_i`.
    pub fn column_mean(&self) -> Vector {
        let n = self.n() as f64;
        self.0.row_sum().transpose() / n
    }

    /// Scatter about the column mean, `Σ_i (x_i − x̄)(x_i − x̄)ᵀ`, plus the mean.
    pub fn centered_scatter(&self) -> (Vector, Matrix) {
        let mean = self.column_mean();
        let centered = self.centered_by(&mean);
        let scatter = crate::stats::linalg::symmetrize(centered.tr_mul(&centered));
        (mean, scatter)
    }

    /// Rows minus a fixed vector.
    pub fn centered_by(&self, v: &Vector) -> Matrix {
        let mut m = self.0.clone();
        for mut row in m.row_iter_mut() {
            row -= v.transpose();
        }
        m
    }

    /// Pooled population variance of all `n·d` entries.
    pub fn pooled_variance(&self) -> f64 {
        pooled_variance(self.0.as_slice())
    }
}

pub(crate) fn pooled_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Message bits, one per data point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitStream(pub Vec<bool>);

impl BitStream {
    pub fn zeros(n: usize) -> Self {
        BitStream(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn complement(&self) -> Self {
        BitStream(self.0.iter().map(|b| !b).collect())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitStream(iter.into_iter().collect())
    }
}

/// The secret watermark vector `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct WatermarkKey(pub Vector);

impl WatermarkKey {
    pub fn new(w: Vector) -> Self {
        WatermarkKey(w)
    }

    pub fn vector(&self) -> &Vector {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    /// Population variance of the `d` entries.
    pub fn variance(&self) -> f64 {
        pooled_variance(self.0.as_slice())
    }
}
