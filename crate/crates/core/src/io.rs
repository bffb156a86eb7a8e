//! Matrix interchange: a small headered binary format plus CSV export.
//!
//! Binary layout: magic `SSWM`, then version, n and d as little-endian
//! `u64`, then `n·d` little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{BitStream, SignalMatrix, WatermarkKey};
use crate::stats::{Matrix, Vector};

pub const MAGIC: &[u8; 4] = b"SSWM";
pub const FORMAT_VERSION: u64 = 1;
const HEADER_LEN: usize = 4 + 3 * 8;

pub fn encode_matrix(m: &SignalMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.n() * m.d());
    out.extend_from_slice(MAGIC);
    for v in [FORMAT_VERSION, m.n() as u64, m.d() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in m.to_row_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<SignalMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedMatrix(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::MalformedMatrix("bad magic".into()));
    }
    let word =
        |k: usize| u64::from_le_bytes(bytes[4 + 8 * k..12 + 8 * k].try_into().expect("8 bytes"));
    let version = word(0);
    if version != FORMAT_VERSION {
        return Err(Error::MalformedMatrix(format!(
            "unsupported version {version}"
        )));
    }
    let (n, d) = (word(1), word(2));
    let count = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::MalformedMatrix(format!("shape {n}x{d} too large")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count {
        return Err(Error::MalformedMatrix(format!(
            "expected {count} payload bytes, found {}",
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    SignalMatrix::from_row_major(n as usize, d as usize, &values)
}

pub fn write_matrix(m: &SignalMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&encode_matrix(m))?;
    f.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SignalMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_matrix(&bytes)
}

/// Watermark stored as a 1×d matrix.
pub fn write_watermark(w: &WatermarkKey, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(
        &SignalMatrix::new(Matrix::from_row_slice(1, w.d(), w.vector().as_slice())),
        path,
    )
}

pub fn read_watermark(path: impl AsRef<Path>) -> Result<WatermarkKey> {
    let m = read_matrix(path)?;
    if m.n() != 1 {
        return Err(Error::MalformedMatrix(format!(
            "watermark file has {} rows, expected 1",
            m.n()
        )));
    }
    Ok(WatermarkKey::new(m.row(0)))
}

/// Bits stored as an n×1 matrix of zeros and ones.
pub fn write_bits(b: &BitStream, path: impl AsRef<Path>) -> Result<()> {
    let m = SignalMatrix::from_row_major(b.len(), 1, &b.as_f64())?;
    write_matrix(&m, path)
}

pub fn read_bits(path: impl AsRef<Path>) -> Result<BitStream> {
    let m = read_matrix(path)?;
    if m.d() != 1 {
        return Err(Error::MalformedMatrix(format!(
            "bit file has {} columns, expected 1",
            m.d()
        )));
    }
    m.as_matrix()
        .iter()
        .map(|&v| match v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            other => Err(Error::MalformedMatrix(format!("bit value {other}"))),
        })
        .collect()
}

/// Headerless CSV with one matrix row per line.
pub fn write_matrix_csv(m: &SignalMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    for i in 0..m.n() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<SignalMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::MalformedMatrix(format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Vector::from_vec(row));
    }
    SignalMatrix::from_rows(&rows)
}
