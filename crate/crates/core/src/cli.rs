//! Command-line front end. The binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on invalid arguments or
//! input. Index files are sorted, one index per line; reports are JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::baselines::{fds_from, kmeans, DEFAULT_MAX_ITERS};
use crate::experiments::{run_ablation, run_comparison, run_method, AblationAxis, TEMPERATURE_SWEEP};
use crate::feature_store::{load_pool, make_synthetic_pool, save_pool, FeaturePool, PoolFormat, SyntheticSpec};
use crate::matching::{greedy_match, Method, SelectionResult};
use crate::metrics::{diversity_stats, emd_closed_form, emd_lp_oracle, LossSummary, ORACLE_CAP};
use crate::model::{assumption_diagnostic, Temperature};
use crate::optimizer::{init_params, optimize, CiUpdate, OptimizerConfig, Regularizer};
use crate::report::{
    config_digest, read_indices, write_indices, write_json, DiagReport, EvalReport, OracleCheck, SelectReport,
    SelectionMetrics, SCHEMA_VERSION,
};
use crate::{Error, Result};

/// Environment variable holding the default worker thread count (0 = auto).
pub const THREADS_ENV: &str = "ACTIVEFT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "activeft", version, about = "Select a representative, diverse subset of a feature pool")]
pub struct Cli {
    /// Worker threads; 0 picks automatically.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic clustered pool on the unit sphere.
    Synth(SynthArgs),
    /// Select a subset of a pool.
    Select(SelectArgs),
    /// Evaluate an existing selection.
    Eval(EvalArgs),
    /// Top-k mean exponential similarity of pool features to the parameters.
    Diag(DiagArgs),
    /// Run a comparison or ablation suite on a synthetic pool.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    #[arg(long = "per-cluster", default_value_t = 100)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.05)]
    pub spread: f64,
    /// Explicit cluster sizes, overriding --clusters and --per-cluster.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

impl SpecArgs {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        match &self.sizes {
            Some(sizes) => SyntheticSpec::with_sizes(sizes.clone(), self.dim, self.spread, seed),
            None => SyntheticSpec::new(self.clusters, self.per_cluster, self.dim, self.spread, seed),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to CSV for `.csv` paths and FPL1 otherwise.
    #[arg(long, value_enum)]
    pub format: Option<PoolFormat>,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long = "pool-format", value_enum)]
    pub pool_format: Option<PoolFormat>,
    /// Require rows to be unit-norm already instead of normalizing them.
    #[arg(long)]
    pub no_normalize: bool,
}

impl PoolArgs {
    fn load(&self) -> Result<FeaturePool> {
        let format = self.pool_format.unwrap_or_else(|| PoolFormat::from_path(&self.pool));
        load_pool(&self.pool, format, !self.no_normalize)
    }
}

/// Per-iteration batch size: `None` uses the whole pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample(pub Option<usize>);

fn parse_subsample(text: &str) -> std::result::Result<Subsample, String> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(Subsample(None));
    }
    text.parse::<usize>()
        .map(|m| Subsample(Some(m)))
        .map_err(|_| format!("expected `all` or a positive count, got {text:?}"))
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 0.07)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 300)]
    pub iterations: usize,
    /// Per-iteration batch size, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_subsample)]
    pub subsample: Subsample,
    #[arg(long = "ci-update", value_enum, default_value_t = CiUpdate::EveryIteration)]
    pub ci_update: CiUpdate,
    #[arg(long, value_enum, default_value_t = Regularizer::ActiveFt)]
    pub regularizer: Regularizer,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
}

impl OptimizerArgs {
    fn config(&self, seed: u64) -> Result<OptimizerConfig> {
        Ok(OptimizerConfig {
            tau: Temperature::new(self.tau)?,
            lambda: self.lambda,
            lr: self.lr,
            iterations: self.iterations,
            subsample_m: self.subsample.0,
            ci_update: self.ci_update,
            regularizer: self.regularizer,
            adam_beta1: self.beta1,
            adam_beta2: self.beta2,
            adam_eps: self.eps,
            seed,
        })
    }
}

#[derive(Debug, Args)]
#[group(id = "budget", required = true, multiple = false, args = ["b", "ratio"])]
pub struct BudgetArgs {
    /// Number of items to select.
    #[arg(long)]
    pub b: Option<usize>,
    /// Fraction of the pool to select, rounded down, at least 1.
    #[arg(long)]
    pub ratio: Option<f64>,
}

impl BudgetArgs {
    fn resolve(&self, n: usize) -> Result<usize> {
        match (self.b, self.ratio) {
            (Some(b), _) => Ok(b),
            (None, Some(r)) => budget_from_ratio(r, n),
            (None, None) => Err(Error::invalid("a budget (--b or --ratio) is required")),
        }
    }
}

/// `floor(ratio * n)`, at least 1. A small slack absorbs products such as
/// `0.29 * 100` landing just below an integer.
pub fn budget_from_ratio(ratio: f64, n: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::invalid(format!("ratio must lie in (0, 1], got {ratio}")));
    }
    let b = (ratio * n as f64 + 1e-9).floor() as usize;
    Ok(b.max(1))
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output index file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// FDS: use this pool index as the first center instead of a seeded draw.
    #[arg(long = "first-center")]
    pub first_center: Option<usize>,
    /// k-means: iteration cap for Lloyd's algorithm.
    #[arg(long = "max-iters", default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long)]
    pub indices: PathBuf,
    /// Cross-check the closed-form EMD against the exact transport solver.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Number of parameters.
    #[arg(long)]
    pub b: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Run the optimizer first and diagnose its final parameters instead of
    /// the random initialization.
    #[arg(long = "from-select")]
    pub from_select: bool,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Compare selection methods over several seeds.
    Compare(CompareArgs),
    /// Vary one optimizer setting over several seeds.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "pool-seed", default_value_t = 0)]
    pub pool_seed: u64,
    #[arg(long)]
    pub b: usize,
    /// Number of seeds, starting at --seed-start.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long = "seed-start", default_value_t = 0)]
    pub seed_start: u64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl SuiteArgs {
    fn seed_list(&self) -> Vec<u64> {
        (self.seed_start..self.seed_start + self.seeds).collect()
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Method::ALL)]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub suite: SuiteArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, value_enum)]
    pub axis: AblationAxis,
    /// Axis values; defaults to the full sweep for the axis.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    #[command(flatten)]
    pub suite: SuiteArgs,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Select(a) => cmd_select(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Diag(a) => cmd_diag(a),
        Command::Experiment(ExperimentCommand::Compare(a)) => cmd_compare(a),
        Command::Experiment(ExperimentCommand::Ablate(a)) => cmd_ablate(a),
    }
}

fn emit_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
                _ => Ok(()),
            }
        }
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let pool = make_synthetic_pool(&a.spec.spec(a.seed))?;
    let format = a.format.unwrap_or_else(|| PoolFormat::from_path(&a.out));
    save_pool(&pool, &a.out, format)?;
    eprintln!("wrote {} x {} pool to {}", pool.n(), pool.dim(), a.out.display());
    Ok(())
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let started = Instant::now();
    let pool = a.pool.load()?;
    let b = a.budget.resolve(pool.n())?;
    if b == 0 || b > pool.n() {
        return Err(Error::Budget { b, n: pool.n() });
    }
    let opt = a.optimizer.config(a.seed)?;

    let (selection, config_json, loss) = match (a.method, a.first_center) {
        (Method::Fds, Some(first)) => {
            let cfg = serde_json::json!({ "method": "fds", "b": b, "first_center": first });
            let run = fds_from(&pool, b, first)?;
            let sel = SelectionResult::new(run.picks, pool.n(), Method::Fds, a.seed, config_digest(&cfg))?;
            (sel, cfg, None)
        }
        (Method::Kmeans, _) if a.max_iters != DEFAULT_MAX_ITERS => {
            let cfg = serde_json::json!({ "method": "kmeans", "b": b, "seed": a.seed, "max_iters": a.max_iters });
            let run = kmeans(&pool, b, a.seed, a.max_iters)?;
            let indices = greedy_match(&pool, &run.centroids)?;
            let sel = SelectionResult::new(indices, pool.n(), Method::Kmeans, a.seed, config_digest(&cfg))?;
            (sel, cfg, None)
        }
        (method, _) => {
            let (sel, trace) = run_method(&pool, method, b, a.seed, &opt)?;
            let cfg = match method {
                Method::ActiveFt => serde_json::to_value(&opt)?,
                Method::Kmeans => serde_json::json!({ "method": "kmeans", "b": b, "seed": a.seed, "max_iters": a.max_iters }),
                _ => serde_json::json!({ "method": method.name(), "b": b, "seed": a.seed }),
            };
            let loss = trace.map(|t| LossSummary {
                initial: t.initial_full_loss,
                last: t.final_full_loss,
            });
            (sel, cfg, loss)
        }
    };

    write_indices(&a.out, &selection.indices)?;
    let (emd, _) = emd_closed_form(&pool, &selection)?;
    let (min_pairwise, mean_nearest) = diversity_stats(&pool, &selection)?;
    if let Some(path) = &a.report {
        let report = SelectReport {
            schema_version: SCHEMA_VERSION,
            method: selection.method.name().to_string(),
            config: config_json,
            config_digest: selection.config_digest.clone(),
            seed: a.seed,
            budget: b,
            pool_size: pool.n(),
            metrics: SelectionMetrics {
                emd,
                min_pairwise,
                mean_nearest,
            },
            loss,
            wall_time_ms: a.timing.then(|| started.elapsed().as_millis() as u64),
        };
        write_json(path, &report)?;
    }
    eprintln!("selected {b} of {} items with {} (EMD {emd:.6})", pool.n(), selection.method);
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let pool = a.pool.load()?;
    let indices = read_indices(&a.indices, pool.n())?;
    let selection = SelectionResult::from_indices(indices, pool.n())?;
    let (emd, _) = emd_closed_form(&pool, &selection)?;
    let (min_pairwise, mean_nearest) = diversity_stats(&pool, &selection)?;
    let oracle = if a.oracle {
        if pool.n() > ORACLE_CAP {
            return Err(Error::TooLarge {
                n: pool.n(),
                cap: ORACLE_CAP,
            });
        }
        let exact = emd_lp_oracle(&pool, &selection)?;
        Some(OracleCheck {
            emd_closed_form: emd,
            emd_oracle: exact,
            abs_diff: (emd - exact).abs(),
        })
    } else {
        None
    };
    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        pool_size: pool.n(),
        budget: selection.b(),
        metrics: SelectionMetrics {
            emd,
            min_pairwise,
            mean_nearest,
        },
        oracle,
    };
    emit_json(a.report.as_deref(), &report)
}

fn cmd_diag(a: &DiagArgs) -> Result<()> {
    let pool = a.pool.load()?;
    if a.b == 0 || a.b > pool.n() {
        return Err(Error::Budget { b: a.b, n: pool.n() });
    }
    if a.k == 0 || a.k > a.b {
        return Err(Error::invalid(format!("--k must be in 1..={} (the budget), got {}", a.b, a.k)));
    }
    let config = a.optimizer.config(a.seed)?;
    let (params, source) = if a.from_select {
        (optimize(&pool, &config, a.b)?.final_params, "optimized")
    } else {
        (init_params(&pool, a.b, a.seed)?, "random_init")
    };
    let diag = assumption_diagnostic(&pool, &params, config.tau, a.k)?;
    let report = DiagReport {
        schema_version: SCHEMA_VERSION,
        params_source: source.to_string(),
        budget: a.b,
        seed: a.seed,
        tau: diag.tau,
        top1_ratio: diag.top1_ratio(),
        topk_mean_exp_sim: diag.topk_mean_exp_sim,
    };
    emit_json(a.report.as_deref(), &report)
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let s = &a.suite;
    let config = s.optimizer.config(0)?;
    let table = run_comparison(&s.spec.spec(s.pool_seed), s.b, &a.methods, &s.seed_list(), &config)?;
    emit_json(s.report.as_deref(), &table)
}

fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let s = &a.suite;
    let raw: Vec<String> = if a.values.is_empty() {
        match a.axis {
            AblationAxis::Temperature => TEMPERATURE_SWEEP.iter().map(|t| t.to_string()).collect(),
            AblationAxis::CiUpdate => vec!["every_iteration".into(), "frozen_at_init".into()],
            AblationAxis::Regularizer => vec!["activeft".into(), "none_s1".into(), "infonce_s2".into()],
        }
    } else {
        a.values.clone()
    };
    let values = raw
        .iter()
        .map(|v| a.axis.parse_value(v))
        .collect::<Result<Vec<_>>>()?;
    let config = s.optimizer.config(0)?;
    let table = run_ablation(&s.spec.spec(s.pool_seed), s.b, a.axis, &values, &s.seed_list(), &config)?;
    emit_json(s.report.as_deref(), &table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_budgets() {
        assert_eq!(budget_from_ratio(0.01, 50_000).unwrap(), 500);
        assert_eq!(budget_from_ratio(0.29, 100).unwrap(), 29);
        assert_eq!(budget_from_ratio(0.001, 10).unwrap(), 1);
        assert_eq!(budget_from_ratio(1.0, 7).unwrap(), 7);
        assert!(budget_from_ratio(0.0, 10).is_err());
        assert!(budget_from_ratio(1.5, 10).is_err());
    }

    #[test]
    fn subsample_parsing() {
        assert_eq!(parse_subsample("all"), Ok(Subsample(None)));
        assert_eq!(parse_subsample("100000"), Ok(Subsample(Some(100_000))));
        assert!(parse_subsample("many").is_err());
    }

    #[test]
    fn missing_out_is_usage_error() {
        assert_eq!(run(["activeft", "synth", "--clusters", "3"]), 2);
        assert_eq!(run(["activeft", "frobnicate"]), 2);
    }

    #[test]
    fn optimizer_flags_parse() {
        let cli = Cli::try_parse_from([
            "activeft", "diag", "--pool", "p.csv", "--b", "3", "--subsample", "10", "--ci-update", "frozen_at_init",
        ])
        .unwrap();
        let Command::Diag(d) = cli.command else { panic!("expected diag") };
        let c = d.optimizer.config(5).unwrap();
        assert_eq!(c.subsample_m, Some(10));
        assert_eq!(c.ci_update, CiUpdate::FrozenAtInit);
        assert_eq!(c.seed, 5);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
