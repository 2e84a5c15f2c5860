//! Jacobian estimation and the fingerprint file format.
//!
//! For each base query the input differences `dx_j = e(x'_j) - e(x)` and
//! output differences `dy_j = mean_e(y'_j) - mean_e(y)` are stacked and a
//! ridge regression finds the matrix `J` minimizing
//! `sum_j |dy_j - J dx_j|^2 + alpha |J|_F^2`. The fingerprint is the
//! entrywise mean of the per-query Jacobians.

mod io;
mod pipeline;
mod ridge;

pub use io::{load_fingerprint, read_fingerprint, save_fingerprint, write_fingerprint, MAGIC, VERSION};
pub use pipeline::{
    estimate_jacobian, extract_fingerprint, fingerprint_from_responses, ExtractConfig,
};
pub use ridge::{
    aggregate, difference_pairs, mean_embedding, mean_vector, ridge_dual, ridge_jacobian,
    ridge_objective, ridge_primal, DifferencePairs, RidgeConfig,
};

use std::path::PathBuf;

use nalgebra::DMatrix;

use crate::clients::ClientError;

#[derive(Debug, thiserror::Error)]
pub enum FingerprintError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("ridge alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("every base query has collapsed perturbations; the Jacobian is unidentifiable")]
    AllDegenerate,
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic bytes, not a fingerprint file")]
    BadMagic,
    #[error("unsupported fingerprint format version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated fingerprint: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("metadata and matrix size disagree: {0}")]
    SizeMismatch(String),
    #[error("bad metadata: {0}")]
    Metadata(String),
}

pub type Result<T> = std::result::Result<T, FingerprintError>;

/// Provenance carried alongside the Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintMeta {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub alpha: f64,
    /// Base queries that contributed to the aggregate.
    pub n_used: usize,
    pub embedder: String,
    pub dim: usize,
    pub query_hash: String,
    pub model: String,
    pub created_unix: u64,
    pub version: u8,
}

/// An aggregated `dim x dim` Jacobian and its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub jacobian: DMatrix<f64>,
    pub meta: FingerprintMeta,
}

impl Fingerprint {
    pub fn new(jacobian: DMatrix<f64>, meta: FingerprintMeta) -> Result<Self> {
        if jacobian.nrows() != meta.dim || jacobian.ncols() != meta.dim {
            return Err(FingerprintError::SizeMismatch(format!(
                "matrix is {}x{}, metadata says dim={}",
                jacobian.nrows(),
                jacobian.ncols(),
                meta.dim
            )));
        }
        if jacobian.iter().any(|v| !v.is_finite()) {
            return Err(FingerprintError::NonFinite("jacobian"));
        }
        Ok(Self { jacobian, meta })
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }
}
