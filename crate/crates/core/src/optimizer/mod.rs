//! Projected Adam over the parameter set.
//!
//! Each iteration draws a batch (the whole pool unless a subsample size is
//! configured), refreshes or reuses the nearest-parameter assignment, takes
//! one Adam step on the loss in [`loss`], and renormalizes every parameter
//! row onto the unit sphere.

mod adam;
mod loss;

pub use adam::Adam;
pub use loss::{compute_loss, loss_gradient, LossBreakdown};

use serde::{Deserialize, Serialize};

use crate::feature_store::FeaturePool;
use crate::model::{assign, Assignment, SelectionParams, Temperature};
use crate::rng::{draw_distinct, seeded, Rng};
use crate::{Error, Result};

/// When the nearest-parameter assignment is recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CiUpdate {
    /// Recompute before every step.
    #[default]
    EveryIteration,
    /// Compute once from the initial parameters and keep it.
    FrozenAtInit,
}

/// Which diversity term accompanies the distribution-matching term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// Log-sum-exp of each parameter's similarities to the others.
    #[default]
    #[value(name = "activeft")]
    #[serde(rename = "activeft")]
    ActiveFt,
    /// No diversity term; parameters are free to collapse.
    #[value(name = "none_s1")]
    NoneS1,
    /// Contrastive feature-vs-batch form.
    #[value(name = "infonce_s2")]
    InfoNceS2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub tau: Temperature,
    pub lambda: f64,
    pub lr: f64,
    pub iterations: usize,
    /// Per-iteration batch size; `None` uses the whole pool.
    pub subsample_m: Option<usize>,
    pub ci_update: CiUpdate,
    pub regularizer: Regularizer,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tau: Temperature::DEFAULT,
            lambda: 1.0,
            lr: 1e-3,
            iterations: 300,
            subsample_m: None,
            ci_update: CiUpdate::EveryIteration,
            regularizer: Regularizer::ActiveFt,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the config on its own and against a pool of `n` items.
    pub fn validate(&self, n: usize) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite"));
        }
        if !open_unit(self.adam_beta1) || !open_unit(self.adam_beta2) {
            return Err(Error::invalid("Adam decay rates must lie in (0, 1)"));
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        match self.subsample_m {
            Some(0) => Err(Error::invalid("subsample size must be at least 1")),
            Some(m) if m > n => Err(Error::invalid(format!("subsample size {m} exceeds pool size {n}"))),
            _ => Ok(()),
        }
    }
}

/// Loss trace of one run plus its endpoints on the full pool.
#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    /// One entry per iteration, evaluated on that iteration's batch before
    /// the step.
    pub losses: Vec<LossBreakdown>,
    /// Pool rows the parameters were initialized from, in parameter order.
    pub init_indices: Vec<usize>,
    pub initial_params: SelectionParams,
    pub final_params: SelectionParams,
    /// Full-pool loss at the initial parameters.
    pub initial_full_loss: LossBreakdown,
    /// Full-pool loss at the final parameters.
    pub final_full_loss: LossBreakdown,
}

fn check_budget(n: usize, b: usize) -> Result<()> {
    if b == 0 || b > n {
        return Err(Error::Budget { b, n });
    }
    Ok(())
}

fn draw_init(pool: &FeaturePool, b: usize, rng: &mut Rng) -> Result<(Vec<usize>, SelectionParams)> {
    check_budget(pool.n(), b)?;
    let indices = draw_distinct(rng, pool.n(), b);
    let params = SelectionParams::from_pool_rows(pool, &indices);
    Ok((indices, params))
}

/// Parameters copied from `b` pool rows drawn uniformly without replacement.
///
/// Draws the same rows, in the same order, as the random baseline and as
/// [`optimize`] for the same seed.
pub fn init_params(pool: &FeaturePool, b: usize, seed: u64) -> Result<SelectionParams> {
    draw_init(pool, b, &mut seeded(seed)).map(|(_, p)| p)
}

/// Loss on the full pool, with the assignment the configured policy would use.
pub fn full_pool_loss(
    pool: &FeaturePool,
    params: &SelectionParams,
    config: &OptimizerConfig,
    frozen: Option<&Assignment>,
) -> Result<LossBreakdown> {
    let fresh;
    let assignment = match (config.ci_update, frozen) {
        (CiUpdate::FrozenAtInit, Some(a)) => a,
        _ => {
            fresh = assign(pool, params)?;
            &fresh
        }
    };
    compute_loss(pool, params, config, assignment)
}

pub fn optimize(pool: &FeaturePool, config: &OptimizerConfig, b: usize) -> Result<OptimizationTrace> {
    config.validate(pool.n())?;
    check_budget(pool.n(), b)?;
    if b < 2 && config.regularizer != Regularizer::NoneS1 {
        return Err(Error::DegenerateBudget);
    }

    let mut rng = seeded(config.seed);
    let (init_indices, mut params) = draw_init(pool, b, &mut rng)?;
    let initial_params = params.clone();

    let frozen = match config.ci_update {
        CiUpdate::FrozenAtInit => Some(assign(pool, &params)?),
        CiUpdate::EveryIteration => None,
    };
    let initial_full_loss = full_pool_loss(pool, &params, config, frozen.as_ref())?;

    let mut adam = Adam::new(
        params.as_slice().len(),
        config.lr,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
    );
    let mut losses = Vec::with_capacity(config.iterations);
    let full_batch = match config.subsample_m {
        None => true,
        Some(m) => m == pool.n(),
    };

    for _ in 0..config.iterations {
        let (batch_store, rows);
        let batch = if full_batch {
            rows = None;
            pool
        } else {
            let mut idx = draw_distinct(&mut rng, pool.n(), config.subsample_m.unwrap_or(pool.n()));
            idx.sort_unstable();
            batch_store = pool.gather(&idx);
            rows = Some(idx);
            &batch_store
        };

        let assignment = match (&frozen, &rows) {
            (Some(a), Some(rows)) => a.gather(rows),
            (Some(a), None) => a.clone(),
            (None, _) => assign(batch, &params)?,
        };

        losses.push(compute_loss(batch, &params, config, &assignment)?);
        let grad = loss_gradient(batch, &params, config, &assignment)?;
        adam.step(params.as_mut_slice(), &grad);
        params.project();
    }

    let final_full_loss = full_pool_loss(pool, &params, config, frozen.as_ref())?;
    Ok(OptimizationTrace {
        losses,
        init_indices,
        initial_params,
        final_params: params,
        initial_full_loss,
        final_full_loss,
    })
}
