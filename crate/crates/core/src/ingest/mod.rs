//! Grayscale image I/O and the 8×8 patch pipeline.

mod patch;
mod pgm;

pub use patch::{patchify, patchify_with_edge, unpatchify, PatchLayout};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};

/// Grayscale image, row-major, real-valued intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel buffer size");
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}
