//! Vary one optimizer setting at a time: temperature, assignment update
//! policy and regularizer.

use activeft::experiments::{run_ablation, AblationAxis};
use activeft::feature_store::SyntheticSpec;
use activeft::optimizer::OptimizerConfig;

fn main() -> activeft::Result<()> {
    let spec = SyntheticSpec::with_sizes(vec![240, 30, 30], 16, 0.05, 0);
    let seeds: Vec<u64> = (0..5).collect();
    let sweeps = [
        (AblationAxis::Temperature, vec!["0.04", "0.07", "0.2", "0.5"]),
        (AblationAxis::CiUpdate, vec!["every_iteration", "frozen_at_init"]),
        (AblationAxis::Regularizer, vec!["activeft", "none_s1", "infonce_s2"]),
    ];
    for (axis, raw) in sweeps {
        let values = raw.iter().map(|v| axis.parse_value(v)).collect::<activeft::Result<Vec<_>>>()?;
        let table = run_ablation(&spec, 6, axis, &values, &seeds, &OptimizerConfig::default())?;
        println!("{axis:?}");
        for row in &table.rows {
            let mp = row.min_pairwise.as_ref().map_or(f64::NAN, |s| s.mean);
            println!("  {:<16} EMD {:.4}  min pairwise {:.4}", row.label, row.emd.mean, mp);
        }
    }
    Ok(())
}
