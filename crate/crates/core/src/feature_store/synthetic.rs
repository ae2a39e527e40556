use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::FeaturePool;
use crate::rng::{seeded, Rng};
use crate::{Error, Result};

/// Mixture of Gaussian blobs on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    /// Per-direction angular standard deviation around each center, radians.
    pub spread: f64,
    pub seed: u64,
    /// Per-cluster sizes overriding `points_per_cluster`, for unbalanced pools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_sizes: Option<Vec<usize>>,
}

impl SyntheticSpec {
    pub fn new(n_clusters: usize, points_per_cluster: usize, dim: usize, spread: f64, seed: u64) -> Self {
        Self {
            n_clusters,
            points_per_cluster,
            dim,
            spread,
            seed,
            cluster_sizes: None,
        }
    }

    /// A pool whose clusters have the given sizes.
    pub fn with_sizes(sizes: Vec<usize>, dim: usize, spread: f64, seed: u64) -> Self {
        Self {
            n_clusters: sizes.len(),
            points_per_cluster: sizes.iter().copied().max().unwrap_or(0),
            dim,
            spread,
            seed,
            cluster_sizes: Some(sizes),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.cluster_sizes
            .clone()
            .unwrap_or_else(|| vec![self.points_per_cluster; self.n_clusters])
    }

    pub fn total(&self) -> usize {
        self.sizes().iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::invalid("n_clusters must be at least 1"));
        }
        if self.points_per_cluster == 0 && self.cluster_sizes.is_none() {
            return Err(Error::invalid("points_per_cluster must be at least 1"));
        }
        if let Some(sizes) = &self.cluster_sizes {
            if sizes.len() != self.n_clusters || sizes.contains(&0) {
                return Err(Error::invalid("cluster_sizes must list one positive size per cluster"));
            }
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim must be at least 2"));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::invalid("spread must be positive"));
        }
        Ok(())
    }
}

/// A generated pool together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticPool {
    pub pool: FeaturePool,
    /// Unit-norm cluster centers, one per cluster.
    pub centers: Vec<Vec<f32>>,
    /// Cluster of each pool row.
    pub labels: Vec<usize>,
}

pub fn make_synthetic_pool(spec: &SyntheticSpec) -> Result<FeaturePool> {
    generate_synthetic(spec).map(|s| s.pool)
}

/// Centers are uniform on the sphere. Each point adds isotropic Gaussian
/// noise in the tangent space at its center, then renormalizes. Rows are
/// laid out cluster by cluster.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticPool> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let dim = spec.dim;
    let centers: Vec<Vec<f64>> = (0..spec.n_clusters).map(|_| random_unit(&mut rng, dim)).collect();

    let sizes = spec.sizes();
    let mut data = Vec::with_capacity(spec.total() * dim);
    let mut labels = Vec::with_capacity(spec.total());
    for (k, (center, &size)) in centers.iter().zip(&sizes).enumerate() {
        for _ in 0..size {
            let mut noise: Vec<f64> = (0..dim)
                .map(|_| spec.spread * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            let along: f64 = noise.iter().zip(center).map(|(a, b)| a * b).sum();
            for (x, c) in noise.iter_mut().zip(center) {
                *x -= along * c;
            }
            data.extend(center.iter().zip(&noise).map(|(c, e)| (c + e) as f32));
            labels.push(k);
        }
    }
    let pool = FeaturePool::new(dim, data, true)?;
    let centers = centers
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f32).collect())
        .collect();
    Ok(SyntheticPool { pool, centers, labels })
}

fn random_unit(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
    }

    #[test]
    fn zero_spread_limit() {
        let pool = make_synthetic_pool(&SyntheticSpec::new(1, 5, 4, 1e-6, 1)).unwrap();
        assert_eq!(pool.n(), 5);
        for i in 0..5 {
            for j in 0..5 {
                assert!(dot(pool.row(i), pool.row(j)) > 0.9999);
            }
        }
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::new(3, 10, 16, 0.05, 7);
        assert_eq!(make_synthetic_pool(&spec).unwrap(), make_synthetic_pool(&spec).unwrap());
        let other = SyntheticSpec { seed: 8, ..spec.clone() };
        assert_ne!(make_synthetic_pool(&spec).unwrap(), make_synthetic_pool(&other).unwrap());
    }

    #[test]
    fn within_cluster_tighter_than_across() {
        let synth = generate_synthetic(&SyntheticSpec::new(3, 10, 16, 0.05, 7)).unwrap();
        let pool = &synth.pool;
        let (mut within, mut nw, mut across, mut na) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..pool.n() {
            for j in (i + 1)..pool.n() {
                let s = dot(pool.row(i), pool.row(j));
                if synth.labels[i] == synth.labels[j] {
                    within += s;
                    nw += 1;
                } else {
                    across += s;
                    na += 1;
                }
            }
        }
        assert!(within / nw as f64 > across / na as f64);
    }

    #[test]
    fn unbalanced_sizes() {
        let synth = generate_synthetic(&SyntheticSpec::with_sizes(vec![8, 1, 1], 5, 0.1, 3)).unwrap();
        assert_eq!(synth.pool.n(), 10);
        assert_eq!(synth.labels.iter().filter(|&&l| l == 0).count(), 8);
    }

    #[test]
    fn invalid_specs() {
        assert!(make_synthetic_pool(&SyntheticSpec::new(0, 5, 4, 0.1, 1)).is_err());
        assert!(make_synthetic_pool(&SyntheticSpec::new(1, 0, 4, 0.1, 1)).is_err());
        assert!(make_synthetic_pool(&SyntheticSpec::new(1, 5, 4, 0.0, 1)).is_err());
        assert!(make_synthetic_pool(&SyntheticSpec::with_sizes(vec![3, 0], 4, 0.1, 1)).is_err());
    }
}
