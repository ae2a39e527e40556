//! Representative subset selection over pools of unit-normalized feature
//! vectors.
//!
//! A budget of `B` continuous parameters on the unit sphere is fitted to the
//! pool by projected Adam on a loss that pulls each parameter toward the pool
//! features nearest to it while pushing parameters apart from one another.
//! The fitted parameters are then snapped to `B` distinct pool items.
//!
//! Alongside the optimizer the crate ships reference baselines (uniform
//! random, k-center-greedy, k-means), an earth mover's distance diagnostic
//! with an exact transport solver for cross-checking it, and a small
//! experiment harness over seeded synthetic pools.
//!
//! ```no_run
//! use activeft::{feature_store::{make_synthetic_pool, SyntheticSpec}, optimizer, matching, metrics};
//!
//! let pool = make_synthetic_pool(&SyntheticSpec::new(3, 100, 16, 0.05, 7)).unwrap();
//! let config = optimizer::OptimizerConfig::default();
//! let trace = optimizer::optimize(&pool, &config, 6).unwrap();
//! let selection = matching::select(&pool, &trace.final_params, &config).unwrap();
//! let (emd, _plan) = metrics::emd_closed_form(&pool, &selection).unwrap();
//! println!("EMD = {emd:.4}");
//! ```

pub mod baselines;
pub mod cli;
mod error;
pub mod experiments;
pub mod feature_store;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod report;
mod rng;

pub use error::{Error, Result};
pub use feature_store::{FeaturePool, SyntheticSpec};
pub use matching::{Method, SelectionResult};
pub use model::{Assignment, MixtureDiagnostics, SelectionParams, Temperature};
pub use optimizer::{OptimizationTrace, OptimizerConfig};
