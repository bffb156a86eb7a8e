//! Binary PGM (`P5`) with 8-bit samples.

use std::fs;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::MalformedHeader(format!(
            "expected magic P5, found {magic:?}"
        )));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader(format!("missing header field {k}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("header field {text} out of range")))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "empty image {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedMaxval(maxval.min(u32::MAX as u64) as u32));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: pos,
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    let expected = h.width * h.height;
    let raster = &bytes[h.data_start..];
    if raster.len() < expected {
        return Err(Error::TruncatedData {
            expected,
            found: raster.len(),
        });
    }
    let pixels = raster[..expected]
        .iter()
        .map(|&b| f64::from(b.min(h.maxval as u8)))
        .collect();
    Ok(GrayImage::new(h.width, h.height, pixels))
}

/// Quantize to 8 bits: clamp to [0, 255], round half to even.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|&p| {
        if p.is_nan() {
            0
        } else {
            p.clamp(0.0, 255.0).round_ties_even() as u8
        }
    }));
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}
