//! Seeded comparison and ablation suites over synthetic pools.
//!
//! Every table is a pure function of its inputs: the pool comes from the
//! spec's own seed, and each (method or value, seed) cell runs independently
//! with that seed. Cells may run in parallel; output order is fixed.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{select_fds, select_kmeans, select_random, DEFAULT_MAX_ITERS};
use crate::feature_store::{make_synthetic_pool, FeaturePool, SyntheticSpec};
use crate::matching::{select, Method, SelectionResult};
use crate::metrics::diversity_stats;
use crate::model::{assumption_diagnostic, Temperature};
use crate::optimizer::{optimize, CiUpdate, OptimizationTrace, OptimizerConfig, Regularizer};
use crate::report::SCHEMA_VERSION;
use crate::{Error, Result};

/// Runs one selection method. The optimizer trace is returned for `activeft`.
pub fn run_method(
    pool: &FeaturePool,
    method: Method,
    b: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<(SelectionResult, Option<OptimizationTrace>)> {
    match method {
        Method::ActiveFt => {
            let config = config.clone().with_seed(seed);
            let trace = optimize(pool, &config, b)?;
            let selection = select(pool, &trace.final_params, &config)?;
            Ok((selection, Some(trace)))
        }
        Method::Random => Ok((select_random(pool, b, seed)?, None)),
        Method::Fds => Ok((select_fds(pool, b, seed)?, None)),
        Method::Kmeans => Ok((select_kmeans(pool, b, seed, DEFAULT_MAX_ITERS)?, None)),
    }
}

/// One (method or ablation value, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub emd: f64,
    pub min_pairwise: Option<f64>,
    pub mean_nearest: f64,
    /// `entry0 / entry1` of the top-k diagnostic on the final parameters.
    pub top1_ratio: Option<f64>,
    pub final_loss: Option<f64>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub label: String,
    pub runs: usize,
    pub emd: Stat,
    pub min_pairwise: Option<Stat>,
    pub mean_nearest: Stat,
    pub top1_ratio: Option<Stat>,
}

fn aggregate(label: &str, cells: &[&Cell]) -> AggregateRow {
    let pick = |f: &dyn Fn(&Cell) -> Option<f64>| -> Vec<f64> { cells.iter().filter_map(|c| f(c)).collect() };
    AggregateRow {
        label: label.to_string(),
        runs: cells.len(),
        emd: Stat::of(&pick(&|c| Some(c.emd))).unwrap_or(Stat { mean: f64::NAN, std: f64::NAN }),
        min_pairwise: Stat::of(&pick(&|c| c.min_pairwise)),
        mean_nearest: Stat::of(&pick(&|c| Some(c.mean_nearest))).unwrap_or(Stat { mean: f64::NAN, std: f64::NAN }),
        top1_ratio: Stat::of(&pick(&|c| c.top1_ratio)),
    }
}

fn evaluate_cell(
    pool: &FeaturePool,
    label: String,
    seed: u64,
    selection: &SelectionResult,
    trace: Option<&OptimizationTrace>,
    tau: Temperature,
) -> Result<Cell> {
    let (emd, _) = crate::metrics::emd_closed_form(pool, selection)?;
    let (min_pairwise, mean_nearest) = diversity_stats(pool, selection)?;
    let top1_ratio = match trace {
        Some(t) if t.final_params.b() >= 2 => assumption_diagnostic(pool, &t.final_params, tau, 2)?.top1_ratio(),
        _ => None,
    };
    Ok(Cell {
        label,
        seed,
        indices: selection.indices.clone(),
        emd,
        min_pairwise,
        mean_nearest,
        top1_ratio,
        final_loss: trace.map(|t| t.final_full_loss.total),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub schema_version: u32,
    pub spec: SyntheticSpec,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub config: OptimizerConfig,
    /// Aggregates in the order methods were requested.
    pub rows: Vec<AggregateRow>,
    /// Individual runs, grouped by method then seed.
    pub cells: Vec<Cell>,
}

impl ComparisonTable {
    pub fn row(&self, method: Method) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.label == method.name())
    }

    pub fn cells_for(&self, method: Method) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.label == method.name())
    }
}

pub fn run_comparison(
    spec: &SyntheticSpec,
    b: usize,
    methods: &[Method],
    seeds: &[u64],
    config: &OptimizerConfig,
) -> Result<ComparisonTable> {
    if methods.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("comparison needs at least one method and one seed"));
    }
    let pool = make_synthetic_pool(spec)?;
    if b == 0 || b > pool.n() {
        return Err(Error::Budget { b, n: pool.n() });
    }
    let jobs: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(method, seed)| {
            let (selection, trace) = run_method(&pool, method, b, seed, config)?;
            evaluate_cell(&pool, method.name().to_string(), seed, &selection, trace.as_ref(), config.tau)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = methods
        .iter()
        .map(|m| {
            let mine: Vec<&Cell> = cells.iter().filter(|c| c.label == m.name()).collect();
            aggregate(m.name(), &mine)
        })
        .collect();
    Ok(ComparisonTable {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        budget: b,
        seeds: seeds.to_vec(),
        config: config.clone(),
        rows,
        cells,
    })
}

/// Optimizer setting varied by an ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    Temperature,
    CiUpdate,
    Regularizer,
}

impl AblationAxis {
    /// Parses one value of this axis, e.g. `0.07`, `frozen_at_init`, `none_s1`.
    pub fn parse_value(self, text: &str) -> Result<AblationValue> {
        use clap::ValueEnum;
        let text = text.trim();
        match self {
            AblationAxis::Temperature => {
                let t = f64::from_str(text).map_err(|_| Error::invalid(format!("{text:?} is not a temperature")))?;
                Ok(AblationValue::Temperature(Temperature::new(t)?))
            }
            AblationAxis::CiUpdate => CiUpdate::from_str(text, true)
                .map(AblationValue::CiUpdate)
                .map_err(|_| Error::invalid(format!("unknown ci_update value {text:?}"))),
            AblationAxis::Regularizer => Regularizer::from_str(text, true)
                .map(AblationValue::Regularizer)
                .map_err(|_| Error::invalid(format!("unknown regularizer {text:?}"))),
        }
    }
}

/// One point along an ablation axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationValue {
    Temperature(Temperature),
    CiUpdate(CiUpdate),
    Regularizer(Regularizer),
}

impl AblationValue {
    pub fn axis(self) -> AblationAxis {
        match self {
            AblationValue::Temperature(_) => AblationAxis::Temperature,
            AblationValue::CiUpdate(_) => AblationAxis::CiUpdate,
            AblationValue::Regularizer(_) => AblationAxis::Regularizer,
        }
    }

    pub fn label(self) -> String {
        use clap::ValueEnum;
        match self {
            AblationValue::Temperature(t) => format!("tau={}", t.value()),
            AblationValue::CiUpdate(c) => c.to_possible_value().unwrap().get_name().to_string(),
            AblationValue::Regularizer(r) => r.to_possible_value().unwrap().get_name().to_string(),
        }
    }

    pub fn apply(self, base: &OptimizerConfig) -> OptimizerConfig {
        let mut cfg = base.clone();
        match self {
            AblationValue::Temperature(t) => cfg.tau = t,
            AblationValue::CiUpdate(c) => cfg.ci_update = c,
            AblationValue::Regularizer(r) => cfg.regularizer = r,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub schema_version: u32,
    pub spec: SyntheticSpec,
    pub budget: usize,
    pub axis: AblationAxis,
    pub seeds: Vec<u64>,
    pub base_config: OptimizerConfig,
    /// One row per value, in the order given.
    pub rows: Vec<AggregateRow>,
    pub cells: Vec<Cell>,
}

/// Runs the optimizer once per (value, seed), varying one setting of `base`.
pub fn run_ablation(
    spec: &SyntheticSpec,
    b: usize,
    axis: AblationAxis,
    values: &[AblationValue],
    seeds: &[u64],
    base: &OptimizerConfig,
) -> Result<AblationTable> {
    if values.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("ablation needs at least one value and one seed"));
    }
    if let Some(v) = values.iter().find(|v| v.axis() != axis) {
        return Err(Error::invalid(format!("value {} does not belong to axis {axis:?}", v.label())));
    }
    let pool = make_synthetic_pool(spec)?;
    let jobs: Vec<(AblationValue, u64)> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(value, seed)| {
            let cfg = value.apply(base);
            let (selection, trace) = run_method(&pool, Method::ActiveFt, b, seed, &cfg)?;
            evaluate_cell(&pool, value.label(), seed, &selection, trace.as_ref(), cfg.tau)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = values
        .iter()
        .map(|v| {
            let label = v.label();
            let mine: Vec<&Cell> = cells.iter().filter(|c| c.label == label).collect();
            aggregate(&label, &mine)
        })
        .collect();
    Ok(AblationTable {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        budget: b,
        axis,
        seeds: seeds.to_vec(),
        base_config: base.clone(),
        rows,
        cells,
    })
}

/// Temperatures swept by the default temperature ablation.
pub const TEMPERATURE_SWEEP: [f64; 4] = [0.04, 0.07, 0.2, 0.5];

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            iterations: 60,
            ..Default::default()
        }
    }

    #[test]
    fn single_row_table() {
        let spec = SyntheticSpec::new(3, 10, 8, 0.05, 1);
        let t = run_comparison(&spec, 3, &[Method::Random], &[4], &quick()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.cells.len(), 1);
        assert_eq!(t.rows[0].emd.std, 0.0);
    }

    #[test]
    fn comparison_deterministic() {
        let spec = SyntheticSpec::new(3, 10, 8, 0.05, 1);
        let methods = Method::ALL;
        let a = run_comparison(&spec, 4, &methods, &[1, 2], &quick()).unwrap();
        let b = run_comparison(&spec, 4, &methods, &[1, 2], &quick()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.rows.len(), 4);
        assert!(a.row(Method::ActiveFt).unwrap().top1_ratio.is_some());
        assert!(a.row(Method::Random).unwrap().top1_ratio.is_none());
    }

    #[test]
    fn ablation_single_temperature() {
        let spec = SyntheticSpec::new(3, 10, 8, 0.05, 1);
        let v = AblationAxis::Temperature.parse_value("0.07").unwrap();
        let t = run_ablation(&spec, 3, AblationAxis::Temperature, &[v], &[0], &quick()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].label, "tau=0.07");
    }

    #[test]
    fn axis_value_parsing() {
        assert_eq!(
            AblationAxis::CiUpdate.parse_value("frozen_at_init").unwrap(),
            AblationValue::CiUpdate(CiUpdate::FrozenAtInit)
        );
        assert_eq!(
            AblationAxis::Regularizer.parse_value("none_s1").unwrap(),
            AblationValue::Regularizer(Regularizer::NoneS1)
        );
        assert!(AblationAxis::Regularizer.parse_value("bogus").is_err());
        assert!(AblationAxis::Temperature.parse_value("-1").is_err());
        let spec = SyntheticSpec::new(2, 5, 4, 0.1, 1);
        let wrong = AblationValue::Regularizer(Regularizer::NoneS1);
        assert!(run_ablation(&spec, 2, AblationAxis::Temperature, &[wrong], &[0], &quick()).is_err());
    }
}
