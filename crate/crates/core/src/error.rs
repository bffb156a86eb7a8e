use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (jitter escalation exhausted)")]
    NotPositiveDefinite,
    #[error("invalid degrees of freedom {dof} for dimension {dim} (need dof > dim - 1)")]
    InvalidDof { dof: f64, dim: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("watermark has zero variance")]
    ZeroWatermark,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("ELBO became non-finite at sweep {0}")]
    NonFiniteElbo(usize),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PGM maxval {0} (only 8-bit images are supported)")]
    UnsupportedMaxval(u32),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("image {width}x{height} is not divisible into {edge}x{edge} patches")]
    IndivisibleDimensions {
        width: usize,
        height: usize,
        edge: usize,
    },
    #[error("matrix shape {rows}x{cols} does not match patch layout")]
    LayoutMismatch { rows: usize, cols: usize },
    #[error("malformed matrix file: {0}")]
    MalformedMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite
                | Error::DegenerateData(_)
                | Error::NonFinite(_)
                | Error::NonFiniteElbo(_)
        )
    }
}
