//! Snapping continuous parameters to distinct pool items.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::feature_store::FeaturePool;
use crate::model::{check_dims, dot_feature, SelectionParams};
use crate::optimizer::OptimizerConfig;
use crate::report::config_digest;
use crate::{Error, Result};

/// Selection strategy that produced a [`SelectionResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[value(name = "activeft")]
    #[serde(rename = "activeft")]
    ActiveFt,
    Random,
    Fds,
    Kmeans,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ActiveFt, Method::Random, Method::Fds, Method::Kmeans];

    pub fn name(self) -> &'static str {
        match self {
            Method::ActiveFt => "activeft",
            Method::Random => "random",
            Method::Fds => "fds",
            Method::Kmeans => "kmeans",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `B` distinct pool indices, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub method: Method,
    pub seed: u64,
    pub config_digest: String,
}

impl SelectionResult {
    /// Sorts the indices and checks they are distinct and below `n`.
    pub fn new(mut indices: Vec<usize>, n: usize, method: Method, seed: u64, config_digest: String) -> Result<Self> {
        validate_indices(&mut indices, n)?;
        Ok(Self {
            indices,
            method,
            seed,
            config_digest,
        })
    }

    /// A bare selection with no provenance, for evaluating external index lists.
    pub fn from_indices(indices: Vec<usize>, n: usize) -> Result<Self> {
        Self::new(indices, n, Method::Random, 0, String::new())
    }

    pub fn b(&self) -> usize {
        self.indices.len()
    }
}

pub(crate) fn validate_indices(indices: &mut [usize], n: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidSelection("selection is empty".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidSelection(format!("index {bad} out of range for a pool of {n}")));
    }
    indices.sort_unstable();
    if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidSelection(format!("index {} selected twice", w[0])));
    }
    Ok(())
}

/// Maps each row of `targets` (row-major, `pool.dim()` wide) to a distinct
/// pool item by largest dot product.
///
/// Rows are served in descending order of their best similarity (ties: lower
/// pool index, then lower row). A row whose favourite item is already taken
/// gets its best remaining item instead. Returns one pool index per row, in
/// row order.
pub(crate) fn greedy_match(pool: &FeaturePool, targets: &[f64]) -> Result<Vec<usize>> {
    let dim = pool.dim();
    let b = targets.len() / dim;
    if b > pool.n() {
        return Err(Error::Budget { b, n: pool.n() });
    }
    // sims[j][k] = f_k . target_j
    let sims: Vec<Vec<f64>> = targets
        .par_chunks_exact(dim)
        .map(|t| pool.rows().map(|f| dot_feature(f, t)).collect())
        .collect();

    let best_of = |row: &[f64], taken: &[bool]| -> usize {
        let mut best: Option<(usize, f64)> = None;
        for (k, &s) in row.iter().enumerate() {
            if taken[k] {
                continue;
            }
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((k, s));
            }
        }
        best.expect("fewer targets than pool items").0
    };

    let none_taken = vec![false; pool.n()];
    let favourites: Vec<usize> = sims.iter().map(|row| best_of(row, &none_taken)).collect();
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&x, &y| {
        sims[y][favourites[y]]
            .total_cmp(&sims[x][favourites[x]])
            .then(favourites[x].cmp(&favourites[y]))
            .then(x.cmp(&y))
    });

    let mut taken = vec![false; pool.n()];
    let mut out = vec![0; b];
    for j in order {
        let pick = if taken[favourites[j]] {
            best_of(&sims[j], &taken)
        } else {
            favourites[j]
        };
        taken[pick] = true;
        out[j] = pick;
    }
    Ok(out)
}

/// Nearest distinct pool item for every parameter, in parameter order.
pub fn match_params(pool: &FeaturePool, params: &SelectionParams) -> Result<Vec<usize>> {
    check_dims(pool, params)?;
    greedy_match(pool, params.as_slice())
}

/// Matches optimized parameters and wraps them as an `activeft` selection.
pub fn select(pool: &FeaturePool, params: &SelectionParams, config: &OptimizerConfig) -> Result<SelectionResult> {
    let indices = match_params(pool, params)?;
    SelectionResult::new(indices, pool.n(), Method::ActiveFt, config.seed, config_digest(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cosine_sim;

    #[test]
    fn exact_rows_need_no_dedup() {
        let pool = FeaturePool::from_rows(&[[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], false).unwrap();
        let params = SelectionParams::from_pool_rows(&pool, &[2, 0]);
        assert_eq!(match_params(&pool, &params).unwrap(), vec![2, 0]);
    }

    #[test]
    fn conflict_goes_to_stronger_match() {
        // item 1 is the nearest pool item for both parameters; theta_0 is closer to it
        let pool = FeaturePool::from_rows(&[[0.0f32, 1.0], [0.6, 0.8], [1.0, 0.0]], false).unwrap();
        let th0 = [0.62f32, 0.78];
        let th1 = [0.75f32, 0.66];
        let params = SelectionParams::from_rows(&[th0, th1]).unwrap();
        let rank = |t: &[f32]| {
            let mut r: Vec<(usize, f64)> = pool.rows().map(|f| cosine_sim(f, t)).enumerate().collect();
            r.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            r
        };
        let (r0, r1) = (rank(&th0), rank(&th1));
        assert_eq!(r0[0].0, 1);
        assert_eq!(r1[0].0, 1);
        assert!(r0[0].1 > r1[0].1);
        let got = match_params(&pool, &params).unwrap();
        assert_eq!(got, vec![1, r1[1].0]);
        assert_eq!(got[1], 2);
    }

    #[test]
    fn full_budget_covers_pool() {
        let pool = FeaturePool::from_rows(&[[1.0f32, 0.0], [0.8, 0.6], [0.6, 0.8]], false).unwrap();
        let params = SelectionParams::from_rows(&[[1.0f32, 0.0], [1.0, 0.01], [0.99, 0.0]]).unwrap();
        let mut got = match_params(&pool, &params).unwrap();
        got.sort();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn index_validation() {
        assert!(SelectionResult::from_indices(vec![3, 1], 4).is_ok());
        assert_eq!(SelectionResult::from_indices(vec![3, 1], 4).unwrap().indices, vec![1, 3]);
        assert!(SelectionResult::from_indices(vec![1, 1], 4).is_err());
        assert!(SelectionResult::from_indices(vec![4], 4).is_err());
        assert!(SelectionResult::from_indices(vec![], 4).is_err());
    }

    #[test]
    fn too_many_parameters() {
        let pool = FeaturePool::from_rows(&[[1.0f32, 0.0]], false).unwrap();
        let params = SelectionParams::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(match_params(&pool, &params), Err(Error::Budget { .. })));
    }
}
