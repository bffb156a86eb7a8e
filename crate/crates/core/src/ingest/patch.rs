use serde::{Deserialize, Serialize};

use super::GrayImage;
use crate::error::{Error, Result};
use crate::signal::SignalMatrix;

pub const DEFAULT_PATCH_EDGE: usize = 8;

/// How an image maps onto patch vectors.
///
/// A pixel at `(r, c)` lands in row `(r / e)·cols + c / e`, column
/// `(r % e)·e + c % e`, where `e` is the patch edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchLayout {
    pub patch_edge: usize,
    pub rows: usize,
    pub cols: usize,
    pub global_mean: f64,
}

impl PatchLayout {
    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn d(&self) -> usize {
        self.patch_edge * self.patch_edge
    }

    pub fn width(&self) -> usize {
        self.cols * self.patch_edge
    }

    pub fn height(&self) -> usize {
        self.rows * self.patch_edge
    }
}

pub fn patchify(img: &GrayImage) -> Result<(SignalMatrix, PatchLayout)> {
    patchify_with_edge(img, DEFAULT_PATCH_EDGE)
}

// Snap the mean to a 2⁻⁴⁰ grid: for 8-bit pixels both the subtraction and
// the add-back in `unpatchify` are then exact in f64.
fn dyadic_mean(pixels: &[f64]) -> f64 {
    const GRID: f64 = 1_099_511_627_776.0; // 2^40
    let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
    (mean * GRID).round() / GRID
}

pub fn patchify_with_edge(img: &GrayImage, edge: usize) -> Result<(SignalMatrix, PatchLayout)> {
    if edge == 0 || !img.width.is_multiple_of(edge) || !img.height.is_multiple_of(edge) || img.pixels.is_empty() {
        return Err(Error::IndivisibleDimensions {
            width: img.width,
            height: img.height,
            edge,
        });
    }
    let layout = PatchLayout {
        patch_edge: edge,
        rows: img.height / edge,
        cols: img.width / edge,
        global_mean: dyadic_mean(&img.pixels),
    };
    let mut values = vec![0.0; layout.n() * layout.d()];
    for r in 0..img.height {
        for c in 0..img.width {
            let row = (r / edge) * layout.cols + c / edge;
            let col = (r % edge) * edge + c % edge;
            values[row * layout.d() + col] = img.get(r, c) - layout.global_mean;
        }
    }
    let m = SignalMatrix::from_row_major(layout.n(), layout.d(), &values)?;
    Ok((m, layout))
}

pub fn unpatchify(mat: &SignalMatrix, layout: &PatchLayout) -> Result<GrayImage> {
    if mat.n() != layout.n() || mat.d() != layout.d() {
        return Err(Error::LayoutMismatch {
            rows: mat.n(),
            cols: mat.d(),
        });
    }
    let edge = layout.patch_edge;
    let (w, h) = (layout.width(), layout.height());
    let m = mat.as_matrix();
    let mut pixels = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let row = (r / edge) * layout.cols + c / edge;
            let col = (r % edge) * edge + c % edge;
            pixels[r * w + c] = m[(row, col)] + layout.global_mean;
        }
    }
    Ok(GrayImage::new(w, h, pixels))
}
