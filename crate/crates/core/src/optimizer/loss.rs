//! The selection loss and its analytic gradient.
//!
//! ```text
//! L = -mean_i sim(f_i, theta_{c_i}) / tau                      (distribution matching)
//!     + lambda * mean_j log sum_{k != j} exp(sim(theta_j, theta_k) / tau)   (diversity)
//! ```
//!
//! The assignment `c` is an input: within one evaluation it is a constant,
//! so the loss is smooth in `theta` and the gradient below is exact for it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizerConfig, Regularizer};
use crate::feature_store::FeaturePool;
use crate::model::{check_dims, dot, dot_feature, Assignment, SelectionParams};
use crate::{Error, Result};

/// One evaluation of the loss, split into its two summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// `-mean_i sim(f_i, theta_{c_i}) / tau`.
    pub d_term: f64,
    /// The second summand before scaling by `lambda`, so that
    /// `total = d_term + lambda * r_term`. For the InfoNCE variant it is the
    /// mean log-partition over the batch.
    pub r_term: f64,
}

fn check_inputs(
    batch: &FeaturePool,
    params: &SelectionParams,
    config: &OptimizerConfig,
    assignment: &Assignment,
) -> Result<()> {
    check_dims(batch, params)?;
    if params.b() < 2 && config.regularizer != Regularizer::NoneS1 {
        return Err(Error::DegenerateBudget);
    }
    if assignment.len() != batch.n() {
        return Err(Error::invalid(format!(
            "assignment covers {} rows, batch has {}",
            assignment.len(),
            batch.n()
        )));
    }
    if let Some(&bad) = assignment.c.iter().find(|&&c| c >= params.b()) {
        return Err(Error::invalid(format!("assignment refers to parameter {bad} of {}", params.b())));
    }
    Ok(())
}

/// `log sum exp` of the values, shifted by their maximum.
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Softmax weights of the values, in place.
fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    values.iter_mut().for_each(|v| *v /= total);
}

/// Scaled similarities `sim(theta_j, theta_k) / tau` for `k != j`, in `k` order.
fn neighbour_logits(params: &SelectionParams, j: usize, tau: f64) -> Vec<f64> {
    let anchor = params.row(j);
    params
        .rows()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, other)| dot(anchor, other) / tau)
        .collect()
}

/// Scaled similarities `sim(f_k, theta_j) / tau` over every batch row `k`.
fn batch_logits(batch: &FeaturePool, theta: &[f64], tau: f64) -> Vec<f64> {
    batch.rows().map(|f| dot_feature(f, theta) / tau).collect()
}

pub fn compute_loss(
    batch: &FeaturePool,
    params: &SelectionParams,
    config: &OptimizerConfig,
    assignment: &Assignment,
) -> Result<LossBreakdown> {
    check_inputs(batch, params, config, assignment)?;
    let tau = config.tau.value();
    let n = batch.n() as f64;
    let b = params.b();

    let d_term = -batch
        .rows()
        .zip(&assignment.c)
        .map(|(f, &j)| dot_feature(f, params.row(j)) / tau)
        .sum::<f64>()
        / n;

    let r_term = match config.regularizer {
        Regularizer::NoneS1 => 0.0,
        Regularizer::ActiveFt => {
            (0..b)
                .map(|j| log_sum_exp(&neighbour_logits(params, j, tau)))
                .sum::<f64>()
                / b as f64
        }
        Regularizer::InfoNceS2 => {
            let counts = assignment.counts(b);
            let partitions: Vec<f64> = (0..b)
                .into_par_iter()
                .map(|j| {
                    if counts[j] == 0 {
                        0.0
                    } else {
                        log_sum_exp(&batch_logits(batch, params.row(j), tau))
                    }
                })
                .collect();
            counts
                .iter()
                .zip(&partitions)
                .map(|(&c, &p)| c as f64 * p)
                .sum::<f64>()
                / n
        }
    };

    Ok(LossBreakdown {
        total: d_term + config.lambda * r_term,
        d_term,
        r_term,
    })
}

/// Gradient of [`compute_loss`] with respect to the parameters, row-major
/// `B x C`, holding the assignment fixed.
pub fn loss_gradient(
    batch: &FeaturePool,
    params: &SelectionParams,
    config: &OptimizerConfig,
    assignment: &Assignment,
) -> Result<Vec<f64>> {
    check_inputs(batch, params, config, assignment)?;
    let tau = config.tau.value();
    let n = batch.n() as f64;
    let b = params.b();
    let dim = params.dim();
    let mut grad = vec![0.0; b * dim];

    // Each parameter is pulled toward the features assigned to it.
    let pull = -1.0 / (n * tau);
    for (f, &j) in batch.rows().zip(&assignment.c) {
        let g = &mut grad[j * dim..(j + 1) * dim];
        for (gi, &x) in g.iter_mut().zip(f) {
            *gi += pull * f64::from(x);
        }
    }

    match config.regularizer {
        Regularizer::NoneS1 => {}
        Regularizer::ActiveFt => {
            // theta_j appears as the anchor of its own sum and as a neighbour
            // in every other anchor's sum.
            let scale = config.lambda / (b as f64 * tau);
            for j in 0..b {
                let mut weights = neighbour_logits(params, j, tau);
                softmax_in_place(&mut weights);
                let others = (0..b).filter(|&k| k != j);
                for (k, w) in others.zip(weights) {
                    let coef = scale * w;
                    for d in 0..dim {
                        grad[j * dim + d] += coef * params.row(k)[d];
                        grad[k * dim + d] += coef * params.row(j)[d];
                    }
                }
            }
        }
        Regularizer::InfoNceS2 => {
            let counts = assignment.counts(b);
            let expectations: Vec<Option<Vec<f64>>> = (0..b)
                .into_par_iter()
                .map(|j| {
                    if counts[j] == 0 {
                        return None;
                    }
                    let mut weights = batch_logits(batch, params.row(j), tau);
                    softmax_in_place(&mut weights);
                    let mut mean = vec![0.0; dim];
                    for (f, w) in batch.rows().zip(weights) {
                        for (m, &x) in mean.iter_mut().zip(f) {
                            *m += w * f64::from(x);
                        }
                    }
                    Some(mean)
                })
                .collect();
            for (j, mean) in expectations.into_iter().enumerate() {
                if let Some(mean) = mean {
                    let coef = config.lambda * counts[j] as f64 / (n * tau);
                    for (g, m) in grad[j * dim..(j + 1) * dim].iter_mut().zip(mean) {
                        *g += coef * m;
                    }
                }
            }
        }
    }
    Ok(grad)
}
