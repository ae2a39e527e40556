//! Reference selection strategies: uniform random, k-center-greedy under
//! cosine distance (FDS), and k-means with nearest-to-centroid picks.

mod fds;
mod kmeans;

pub use fds::{fds_from, select_fds, FdsRun};
pub use kmeans::{kmeans, select_kmeans, KMeansRun, DEFAULT_MAX_ITERS};

use serde::Serialize;

use crate::feature_store::FeaturePool;
use crate::matching::{Method, SelectionResult};
use crate::report::config_digest;
use crate::rng::{draw_distinct, seeded};
use crate::{Error, Result};

#[derive(Serialize)]
struct BaselineConfig {
    method: Method,
    b: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
}

fn result(pool: &FeaturePool, indices: Vec<usize>, method: Method, seed: u64, max_iters: Option<usize>) -> Result<SelectionResult> {
    let digest = config_digest(&BaselineConfig {
        method,
        b: indices.len(),
        seed,
        max_iters,
    });
    SelectionResult::new(indices, pool.n(), method, seed, digest)
}

pub(crate) fn check_budget(pool: &FeaturePool, b: usize) -> Result<()> {
    if b == 0 || b > pool.n() {
        return Err(Error::Budget { b, n: pool.n() });
    }
    Ok(())
}

/// `b` indices drawn uniformly without replacement. For a given seed these
/// are exactly the rows the optimizer starts from.
pub fn select_random(pool: &FeaturePool, b: usize, seed: u64) -> Result<SelectionResult> {
    check_budget(pool, b)?;
    let indices = draw_distinct(&mut seeded(seed), pool.n(), b);
    result(pool, indices, Method::Random, seed, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::{make_synthetic_pool, SyntheticSpec};
    use rand::SeedableRng;

    fn pool() -> FeaturePool {
        make_synthetic_pool(&SyntheticSpec::new(1, 5, 3, 0.5, 0)).unwrap()
    }

    #[test]
    fn random_full_budget() {
        assert_eq!(select_random(&pool(), 5, 1).unwrap().indices, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn random_replay() {
        let got = select_random(&pool(), 2, 11).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut expect = rand::seq::index::sample(&mut rng, 5, 2).into_vec();
        expect.sort();
        assert_eq!(got.indices, expect);
        assert_eq!(got, select_random(&pool(), 2, 11).unwrap());
        assert_eq!(got.method, Method::Random);
        assert_eq!(got.seed, 11);
    }

    #[test]
    fn random_budget_errors() {
        assert!(matches!(select_random(&pool(), 0, 1), Err(Error::Budget { .. })));
        assert!(matches!(select_random(&pool(), 6, 1), Err(Error::Budget { .. })));
    }
}
