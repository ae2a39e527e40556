//! Optimize the selection parameters on a synthetic pool and map them to
//! pool items.

use activeft::feature_store::{generate_synthetic, SyntheticSpec};
use activeft::matching::select;
use activeft::metrics::{cluster_sizes, diversity_stats, emd_closed_form};
use activeft::optimizer::{optimize, OptimizerConfig};

fn main() -> activeft::Result<()> {
    let synth = generate_synthetic(&SyntheticSpec::new(3, 100, 16, 0.05, 0))?;
    let pool = &synth.pool;
    let config = OptimizerConfig::default().with_seed(1);
    let trace = optimize(pool, &config, 6)?;

    for (t, loss) in trace.losses.iter().enumerate().step_by(50) {
        println!("iter {t:>3}  loss {:>9.4}  (D {:>9.4}, R {:>7.4})", loss.total, loss.d_term, loss.r_term);
    }
    println!(
        "full pool loss {:.4} -> {:.4}",
        trace.initial_full_loss.total, trace.final_full_loss.total
    );

    let selection = select(pool, &trace.final_params, &config)?;
    let labels: Vec<usize> = selection.indices.iter().map(|&i| synth.labels[i]).collect();
    let (emd, _) = emd_closed_form(pool, &selection)?;
    let (min_pairwise, _) = diversity_stats(pool, &selection)?;
    println!("selected {:?} (clusters {labels:?})", selection.indices);
    println!("items served per selected row {:?}", cluster_sizes(pool, &selection)?);
    println!("EMD {emd:.4}, min pairwise distance {:.4}", min_pairwise.unwrap_or(0.0));
    Ok(())
}
