use rand::Rng as _;
use rayon::prelude::*;

use super::{check_budget, result};
use crate::feature_store::FeaturePool;
use crate::matching::{greedy_match, Method, SelectionResult};
use crate::rng::{seeded, Rng};
use crate::Result;

pub const DEFAULT_MAX_ITERS: usize = 100;

/// Outcome of Lloyd's algorithm on the pool.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub k: usize,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    pub labels: Vec<usize>,
    /// Sum of squared distances to the assigned centroid, recorded after the
    /// initial assignment and after every iteration.
    pub objective: Vec<f64>,
    pub converged: bool,
}

fn sq_dist(f: &[f32], c: &[f64]) -> f64 {
    f.iter()
        .zip(c)
        .map(|(&x, &y)| {
            let d = f64::from(x) - y;
            d * d
        })
        .sum()
}

fn nearest(f: &[f32], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(f, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all(pool: &FeaturePool, centroids: &[f64]) -> Vec<(usize, f64)> {
    let dim = pool.dim();
    (0..pool.n())
        .into_par_iter()
        .map(|i| nearest(pool.row(i), centroids, dim))
        .collect()
}

/// k-means++ seeding: first center uniform, the rest drawn with probability
/// proportional to squared distance from the centers so far. When every
/// remaining point coincides with a center, the lowest unused index is taken.
fn plus_plus(pool: &FeaturePool, k: usize, rng: &mut Rng) -> Vec<f64> {
    let n = pool.n();
    let mut used = vec![false; n];
    let first = rng.random_range(0..n);
    used[first] = true;
    let mut centroids: Vec<f64> = pool.row(first).iter().map(|&x| f64::from(x)).collect();
    let mut d2: Vec<f64> = pool.rows().map(|f| sq_dist(f, &centroids)).collect();

    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the running sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            used.iter().position(|&u| !u).unwrap()
        };
        used[pick] = true;
        let center: Vec<f64> = pool.row(pick).iter().map(|&x| f64::from(x)).collect();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(pool.row(i), &center));
        }
        centroids.extend(center);
    }
    centroids
}

/// Lloyd's algorithm with Euclidean distance on the unit-norm features.
///
/// Stops when an assignment repeats or after `max_iters` updates. A cluster
/// left empty by an update is re-seeded at the point currently farthest from
/// its own centroid.
pub fn kmeans(pool: &FeaturePool, k: usize, seed: u64, max_iters: usize) -> Result<KMeansRun> {
    check_budget(pool, k)?;
    let dim = pool.dim();
    let mut rng = seeded(seed);
    let mut centroids = plus_plus(pool, k, &mut rng);

    let assigned = assign_all(pool, &centroids);
    let mut labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
    let mut objective = vec![assigned.iter().map(|a| a.1).sum::<f64>()];
    let mut converged = false;

    for _ in 0..max_iters {
        // update step
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (f, &l) in pool.rows().zip(&labels) {
            counts[l] += 1;
            for (s, &x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(f) {
                *s += f64::from(x);
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in centroids[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *c = s * inv;
                }
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let mut far = (0, f64::NEG_INFINITY);
                for (i, f) in pool.rows().enumerate() {
                    let l = labels[i];
                    if counts[l] < 2 {
                        continue;
                    }
                    let d = sq_dist(f, &centroids[l * dim..(l + 1) * dim]);
                    if d > far.1 {
                        far = (i, d);
                    }
                }
                let p = far.0;
                counts[labels[p]] -= 1;
                labels[p] = j;
                counts[j] = 1;
                for (c, &x) in centroids[j * dim..(j + 1) * dim].iter_mut().zip(pool.row(p)) {
                    *c = f64::from(x);
                }
            }
        }

        // assignment step
        let assigned = assign_all(pool, &centroids);
        let next: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        objective.push(assigned.iter().map(|a| a.1).sum());
        let unchanged = next == labels;
        labels = next;
        if unchanged {
            converged = true;
            break;
        }
    }

    Ok(KMeansRun {
        k,
        centroids,
        labels,
        objective,
        converged,
    })
}

/// k-means with `k = b`, then the nearest distinct pool item to each centroid.
pub fn select_kmeans(pool: &FeaturePool, b: usize, seed: u64, max_iters: usize) -> Result<SelectionResult> {
    let run = kmeans(pool, b, seed, max_iters)?;
    // for unit-norm features the nearest item to c maximizes f . c
    let indices = greedy_match(pool, &run.centroids)?;
    result(pool, indices, Method::Kmeans, seed, Some(max_iters))
}
