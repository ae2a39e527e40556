//! Compare the optimized selection against random, FDS and k-means over
//! several seeds.

use activeft::experiments::run_comparison;
use activeft::feature_store::SyntheticSpec;
use activeft::matching::Method;
use activeft::optimizer::OptimizerConfig;

fn main() -> activeft::Result<()> {
    let spec = SyntheticSpec::new(3, 100, 16, 0.05, 0);
    let seeds: Vec<u64> = (0..10).collect();
    let table = run_comparison(&spec, 6, &Method::ALL, &seeds, &OptimizerConfig::default())?;

    println!("{:<10} {:>16} {:>16}", "method", "EMD", "min pairwise");
    for row in &table.rows {
        let mp = row.min_pairwise.as_ref().map_or(f64::NAN, |s| s.mean);
        println!("{:<10} {:>8.4} ± {:.4} {:>16.4}", row.label, row.emd.mean, row.emd.std, mp);
    }
    Ok(())
}
