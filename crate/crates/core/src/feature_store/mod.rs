//! Feature pools: loading, validation, normalization, persistence, and
//! seeded synthetic generation.

mod io;
mod synthetic;

pub use io::{load_pool, save_pool, PoolFormat};
pub use synthetic::{generate_synthetic, make_synthetic_pool, SyntheticPool, SyntheticSpec};

use crate::{Error, Result};

/// Allowed deviation of a row norm from 1 when a pool is ingested without
/// normalization.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// `n` unit-normalized feature vectors of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePool {
    n: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeaturePool {
    /// Builds a pool from a row-major buffer.
    ///
    /// With `normalize` set, every row is scaled to unit L2 norm first; a row
    /// of zeros is rejected rather than replaced. Without it, rows whose norm
    /// is off by more than [`NORM_TOLERANCE`] are an error.
    pub fn new(dim: usize, mut data: Vec<f32>, normalize: bool) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("feature dimension must be at least 2, got {dim}")));
        }
        if data.is_empty() {
            return Err(Error::invalid("pool must contain at least one row"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        let n = data.len() / dim;
        for (row, chunk) in data.chunks_exact_mut(dim).enumerate() {
            if chunk.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row });
            }
            let norm = l2_norm(chunk);
            if normalize {
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::ZeroNorm { row });
                }
                for x in chunk.iter_mut() {
                    *x = (f64::from(*x) / norm) as f32;
                }
            } else if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NotNormalized { row, norm });
            }
        }
        Ok(Self { n, dim, data })
    }

    /// Builds a pool from a list of rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], normalize: bool) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data, normalize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Copies the given rows, in order, into a new pool.
    pub fn gather(&self, indices: &[usize]) -> FeaturePool {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeaturePool {
            n: indices.len(),
            dim: self.dim,
            data,
        }
    }

    /// Re-normalizes every row. On a pool that already satisfies the
    /// invariants this moves no element by more than one ulp.
    pub fn renormalized(&self) -> Result<FeaturePool> {
        FeaturePool::new(self.dim, self.data.clone(), true)
    }
}

pub(crate) fn l2_norm(row: &[f32]) -> f64 {
    row.iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt()
}
