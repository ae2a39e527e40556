//! Similarity kernel, parameter set, nearest-parameter assignment, and the
//! top-k exponential-similarity diagnostic.
//!
//! The mixture over the parameters is never materialized: with a small
//! temperature each feature's likelihood is dominated by its most similar
//! parameter, so mixture weights and per-component normalizers reduce to
//! constants and only the argmax assignment matters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::feature_store::FeaturePool;
use crate::{Error, Result};

/// Softmax temperature dividing similarities inside exponentials.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub const DEFAULT: Temperature = Temperature(0.07);

    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Temperature(tau))
        } else {
            Err(Error::invalid(format!("temperature must be positive, got {tau}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Temperature::new(v)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

/// Cosine similarity of two unit vectors, i.e. their dot product.
///
/// Accumulates in `f64`, strictly left to right.
pub fn cosine_sim(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

#[inline]
pub(crate) fn dot_feature(f: &[f32], theta: &[f64]) -> f64 {
    f.iter().zip(theta).map(|(x, t)| f64::from(*x) * t).sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The `B` continuous parameters, each a unit vector in feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionParams {
    dim: usize,
    theta: Vec<f64>,
}

impl SelectionParams {
    /// Builds parameters from a row-major buffer, normalizing every row.
    pub fn new(dim: usize, mut theta: Vec<f64>) -> Result<Self> {
        if dim == 0 || theta.is_empty() || !theta.len().is_multiple_of(dim) {
            return Err(Error::invalid("parameter buffer must hold at least one full row"));
        }
        for (row, chunk) in theta.chunks_exact_mut(dim).enumerate() {
            let norm = dot(chunk, chunk).sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::ZeroNorm { row });
            }
            chunk.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(Self { dim, theta })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != dim) {
            return Err(Error::invalid("parameter rows differ in length"));
        }
        let theta = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().map(|&x| f64::from(x)))
            .collect();
        Self::new(dim, theta)
    }

    /// Copies the given pool rows. Pool rows are already unit-norm.
    pub fn from_pool_rows(pool: &FeaturePool, indices: &[usize]) -> Self {
        let theta = indices
            .iter()
            .flat_map(|&i| pool.row(i).iter().map(|&x| f64::from(x)))
            .collect();
        Self { dim: pool.dim(), theta }
    }

    pub fn b(&self) -> usize {
        self.theta.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.theta[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.theta.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Projects every row back onto the unit sphere.
    pub fn project(&mut self) {
        for chunk in self.theta.chunks_exact_mut(self.dim) {
            let norm = dot(chunk, chunk).sqrt();
            if norm > 0.0 {
                chunk.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }

    /// Largest `| ||theta_j|| - 1 |` over rows.
    pub fn max_norm_deviation(&self) -> f64 {
        self.rows()
            .map(|r| (dot(r, r).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Nearest parameter of every pool item.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `c[i]` is the index of the parameter most similar to pool row `i`.
    pub c: Vec<usize>,
    pub top1_sim: Vec<f64>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// The assignment restricted to (and reordered by) `rows`.
    pub fn gather(&self, rows: &[usize]) -> Assignment {
        Assignment {
            c: rows.iter().map(|&i| self.c[i]).collect(),
            top1_sim: rows.iter().map(|&i| self.top1_sim[i]).collect(),
        }
    }

    /// Size of each cluster `{i : c[i] = j}`.
    pub fn counts(&self, b: usize) -> Vec<usize> {
        let mut counts = vec![0; b];
        for &j in &self.c {
            counts[j] += 1;
        }
        counts
    }
}

pub(crate) fn check_dims(pool: &FeaturePool, params: &SelectionParams) -> Result<()> {
    if pool.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: pool.dim(),
            found: params.dim(),
        });
    }
    Ok(())
}

/// Argmax over parameters for each pool row; ties go to the lowest index.
pub fn assign(pool: &FeaturePool, params: &SelectionParams) -> Result<Assignment> {
    check_dims(pool, params)?;
    let (c, top1_sim) = (0..pool.n())
        .into_par_iter()
        .map(|i| {
            let f = pool.row(i);
            let mut best = (0, f64::NEG_INFINITY);
            for (j, theta) in params.rows().enumerate() {
                let s = dot_feature(f, theta);
                if s > best.1 {
                    best = (j, s);
                }
            }
            best
        })
        .unzip();
    Ok(Assignment { c, top1_sim })
}

/// Mean exponential similarity to the k-th most similar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDiagnostics {
    pub tau: f64,
    /// Entry `k` is `mean_i exp(sim(f_i, theta_(k)) / tau)` where
    /// `theta_(k)` is the `k`-th most similar parameter to `f_i`.
    pub topk_mean_exp_sim: Vec<f64>,
}

impl MixtureDiagnostics {
    /// `entry0 / entry1`, the dominance of the top-1 component, when `k >= 2`.
    pub fn top1_ratio(&self) -> Option<f64> {
        match self.topk_mean_exp_sim.as_slice() {
            [a, b, ..] => Some(a / b),
            _ => None,
        }
    }
}

pub fn assumption_diagnostic(
    pool: &FeaturePool,
    params: &SelectionParams,
    tau: Temperature,
    k: usize,
) -> Result<MixtureDiagnostics> {
    check_dims(pool, params)?;
    if k == 0 || k > params.b() {
        return Err(Error::invalid(format!(
            "top-k must be in 1..={} (the number of parameters), got {k}",
            params.b()
        )));
    }
    let t = tau.value();
    let per_row: Vec<Vec<f64>> = (0..pool.n())
        .into_par_iter()
        .map(|i| {
            let f = pool.row(i);
            let mut sims: Vec<f64> = params.rows().map(|theta| dot_feature(f, theta)).collect();
            sims.sort_by(|a, b| b.total_cmp(a));
            sims.truncate(k);
            sims.into_iter().map(|s| (s / t).exp()).collect()
        })
        .collect();
    let n = pool.n() as f64;
    let topk_mean_exp_sim = (0..k)
        .map(|r| per_row.iter().map(|row| row[r]).sum::<f64>() / n)
        .collect();
    Ok(MixtureDiagnostics {
        tau: t,
        topk_mean_exp_sim,
    })
}
