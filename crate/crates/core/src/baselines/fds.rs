use rand::Rng as _;

use super::{check_budget, result};
use crate::feature_store::FeaturePool;
use crate::matching::{Method, SelectionResult};
use crate::model::cosine_sim;
use crate::rng::seeded;
use crate::{Error, Result};

/// Picks of a k-center-greedy run, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct FdsRun {
    pub picks: Vec<usize>,
    /// `radii[t]` is the cosine distance from `picks[t]` to its nearest
    /// earlier pick at the moment it was chosen; infinite for the first pick.
    pub radii: Vec<f64>,
}

fn cosine_distance(a: &[f32], b: &[f32]) -> f64 {
    1.0 - cosine_sim(a, b)
}

/// K-center-greedy from a fixed first pick: each later pick is the
/// unselected item farthest (in cosine distance) from everything chosen so
/// far; ties go to the lowest index.
pub fn fds_from(pool: &FeaturePool, b: usize, first: usize) -> Result<FdsRun> {
    check_budget(pool, b)?;
    if first >= pool.n() {
        return Err(Error::InvalidSelection(format!("first pick {first} out of range")));
    }
    let n = pool.n();
    let mut chosen = vec![false; n];
    let mut nearest: Vec<f64> = pool.rows().map(|f| cosine_distance(f, pool.row(first))).collect();
    chosen[first] = true;
    let mut picks = vec![first];
    let mut radii = vec![f64::INFINITY];

    while picks.len() < b {
        let mut best: Option<(usize, f64)> = None;
        for (i, &d) in nearest.iter().enumerate() {
            if !chosen[i] && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (next, radius) = best.expect("budget checked against pool size");
        chosen[next] = true;
        picks.push(next);
        radii.push(radius);
        let center = pool.row(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(cosine_distance(pool.row(i), center));
        }
    }
    Ok(FdsRun { picks, radii })
}

/// FDS with a uniformly drawn first pick.
pub fn select_fds(pool: &FeaturePool, b: usize, seed: u64) -> Result<SelectionResult> {
    check_budget(pool, b)?;
    let first = seeded(seed).random_range(0..pool.n());
    let run = fds_from(pool, b, first)?;
    result(pool, run.picks, Method::Fds, seed, None)
}
