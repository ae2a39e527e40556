//! Selection quality: earth mover's distance between the pool and the
//! selected subset, an exact transport solver to cross-check it, and
//! diversity statistics.
//!
//! The pool carries mass `1/N` per item; selected item `j` carries
//! `|C_j| / N`, where `C_j` is the set of pool items whose nearest selected
//! item is `j`. Under those marginals the optimal coupling sends every pool
//! item to its nearest selected item, so the distance reduces to
//! `mean_i sqrt(2 - 2 sim(f_i, f_{s_{c_i}}))`.

mod transport;

pub use transport::{emd_lp_oracle, min_cost_transport, ORACLE_CAP};

use serde::{Deserialize, Serialize};

use crate::feature_store::FeaturePool;
use crate::matching::SelectionResult;
use crate::model::MixtureDiagnostics;
use crate::optimizer::LossBreakdown;
use crate::{Error, Result};

/// Euclidean distance between unit vectors with the given cosine similarity.
pub fn unit_distance(sim: f64) -> f64 {
    (2.0 - 2.0 * sim).max(0.0).sqrt()
}

/// Euclidean distance between two pool rows, from coordinate differences
/// so that identical rows are exactly 0 apart.
pub fn row_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Mass moved from pool item `i` to selected slot `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub i: usize,
    /// Position in the selection's sorted index list.
    pub j: usize,
    pub mass: f64,
}

/// Sparse coupling between the uniform pool distribution and the
/// assignment-weighted selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub n: usize,
    pub b: usize,
    pub entries: Vec<PlanEntry>,
}

impl TransportPlan {
    pub fn row_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for e in &self.entries {
            out[e.i] += e.mass;
        }
        out
    }

    pub fn column_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.b];
        for e in &self.entries {
            out[e.j] += e.mass;
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }
}

fn check_selection(pool: &FeaturePool, selection: &SelectionResult) -> Result<()> {
    if selection.indices.is_empty() {
        return Err(Error::InvalidSelection("selection is empty".into()));
    }
    if let Some(&bad) = selection.indices.iter().find(|&&i| i >= pool.n()) {
        return Err(Error::InvalidSelection(format!("index {bad} out of range for a pool of {}", pool.n())));
    }
    Ok(())
}

/// For every pool item: the slot of its nearest selected item (lowest slot
/// on ties) and the distance to it.
pub fn nearest_selected(pool: &FeaturePool, selection: &SelectionResult) -> Result<Vec<(usize, f64)>> {
    check_selection(pool, selection)?;
    Ok(pool
        .rows()
        .map(|f| {
            let mut best = (0, f64::INFINITY);
            for (j, &s) in selection.indices.iter().enumerate() {
                let d = row_distance(f, pool.row(s));
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect())
}

/// Sizes `|C_j|` of the nearest-selected clusters, in slot order.
pub fn cluster_sizes(pool: &FeaturePool, selection: &SelectionResult) -> Result<Vec<usize>> {
    let mut sizes = vec![0; selection.b()];
    for (j, _) in nearest_selected(pool, selection)? {
        sizes[j] += 1;
    }
    Ok(sizes)
}

/// Closed-form earth mover's distance and the coupling that attains it.
pub fn emd_closed_form(pool: &FeaturePool, selection: &SelectionResult) -> Result<(f64, TransportPlan)> {
    let nearest = nearest_selected(pool, selection)?;
    let n = pool.n() as f64;
    let emd = nearest.iter().map(|&(_, d)| d).sum::<f64>() / n;
    let entries = nearest
        .iter()
        .enumerate()
        .map(|(i, &(j, _))| PlanEntry { i, j, mass: 1.0 / n })
        .collect();
    let plan = TransportPlan {
        n: pool.n(),
        b: selection.b(),
        entries,
    };
    Ok((emd, plan))
}

/// `(min pairwise distance among selected items, mean distance from each
/// pool item to its nearest selected item)`. The first is `None` when fewer
/// than two items are selected.
pub fn diversity_stats(pool: &FeaturePool, selection: &SelectionResult) -> Result<(Option<f64>, f64)> {
    let nearest = nearest_selected(pool, selection)?;
    let mean_nearest = nearest.iter().map(|&(_, d)| d).sum::<f64>() / pool.n() as f64;
    let idx = &selection.indices;
    let mut min_pairwise: Option<f64> = None;
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            let d = row_distance(pool.row(idx[a]), pool.row(idx[b]));
            min_pairwise = Some(min_pairwise.map_or(d, |m| m.min(d)));
        }
    }
    Ok((min_pairwise, mean_nearest))
}

/// Loss at the start and end of an optimization run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub initial: LossBreakdown,
    #[serde(rename = "final")]
    pub last: LossBreakdown,
}

/// Everything known about one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub emd: f64,
    pub loss_trace_summary: Option<LossSummary>,
    pub min_pairwise_selected_distance: Option<f64>,
    pub mean_nearest_selected_distance: f64,
    pub assumption_stats: Option<MixtureDiagnostics>,
}

impl DiagnosticsReport {
    pub fn evaluate(pool: &FeaturePool, selection: &SelectionResult) -> Result<Self> {
        let (emd, _) = emd_closed_form(pool, selection)?;
        let (min_pairwise, mean_nearest) = diversity_stats(pool, selection)?;
        Ok(Self {
            emd,
            loss_trace_summary: None,
            min_pairwise_selected_distance: min_pairwise,
            mean_nearest_selected_distance: mean_nearest,
            assumption_stats: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::{make_synthetic_pool, SyntheticSpec};

    fn sel(indices: Vec<usize>, n: usize) -> SelectionResult {
        SelectionResult::from_indices(indices, n).unwrap()
    }

    #[test]
    fn whole_pool_has_zero_emd() {
        let pool = make_synthetic_pool(&SyntheticSpec::new(2, 6, 5, 0.2, 1)).unwrap();
        let all = sel((0..12).collect(), 12);
        let (emd, plan) = emd_closed_form(&pool, &all).unwrap();
        assert_eq!(emd, 0.0);
        assert_eq!(plan.entries.len(), 12);
        let (_, mean_nearest) = diversity_stats(&pool, &all).unwrap();
        assert_eq!(mean_nearest, 0.0);
    }

    #[test]
    fn orthogonal_pair() {
        let pool = FeaturePool::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]], false).unwrap();
        let (emd, plan) = emd_closed_form(&pool, &sel(vec![0], 2)).unwrap();
        assert!((emd - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-12);
        assert!((emd - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert_eq!(plan.column_marginals(), vec![1.0]);
    }

    #[test]
    fn plan_marginals() {
        let pool = make_synthetic_pool(&SyntheticSpec::new(3, 7, 6, 0.3, 4)).unwrap();
        let s = sel(vec![1, 8, 15, 20], pool.n());
        let (_, plan) = emd_closed_form(&pool, &s).unwrap();
        let n = pool.n() as f64;
        assert!(plan.row_marginals().iter().all(|&m| (m - 1.0 / n).abs() < 1e-15));
        let sizes = cluster_sizes(&pool, &s).unwrap();
        for (m, c) in plan.column_marginals().iter().zip(sizes) {
            assert!((m - c as f64 / n).abs() < 1e-12);
        }
        assert!((plan.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn antipodal_diameter() {
        let pool = FeaturePool::from_rows(&[[1.0f32, 0.0], [-1.0, 0.0], [0.0, 1.0]], false).unwrap();
        let (min_pair, _) = diversity_stats(&pool, &sel(vec![0, 1], 3)).unwrap();
        assert_eq!(min_pair, Some(2.0));
        let (min_pair, _) = diversity_stats(&pool, &sel(vec![2], 3)).unwrap();
        assert_eq!(min_pair, None);
    }

    #[test]
    fn mean_nearest_is_emd() {
        let pool = make_synthetic_pool(&SyntheticSpec::new(3, 9, 6, 0.3, 2)).unwrap();
        let s = sel(vec![0, 5, 11], pool.n());
        let (emd, _) = emd_closed_form(&pool, &s).unwrap();
        let (_, mean) = diversity_stats(&pool, &s).unwrap();
        assert!((emd - mean).abs() <= 1e-12);
    }

    #[test]
    fn out_of_range_selection() {
        let pool = FeaturePool::from_rows(&[[1.0f32, 0.0]], false).unwrap();
        let bad = SelectionResult::from_indices(vec![3], 10).unwrap();
        assert!(matches!(emd_closed_form(&pool, &bad), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn distance_guards_rounding() {
        assert_eq!(unit_distance(1.0 + 1e-12), 0.0);
        assert_eq!(unit_distance(-1.0), 2.0);
    }
}
