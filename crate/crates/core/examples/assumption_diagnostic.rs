//! How strongly the nearest parameter dominates each feature's mixture
//! likelihood, at the cluster centers and for a random start.

use activeft::feature_store::{generate_synthetic, SyntheticSpec};
use activeft::model::{assumption_diagnostic, SelectionParams, Temperature};
use activeft::optimizer::init_params;

fn main() -> activeft::Result<()> {
    let synth = generate_synthetic(&SyntheticSpec::new(3, 100, 16, 0.05, 0))?;
    let centers = SelectionParams::from_rows(&synth.centers)?;
    let random = init_params(&synth.pool, 3, 4)?;

    for tau in [0.04, 0.07, 0.2, 0.5] {
        let tau = Temperature::new(tau)?;
        for (name, params) in [("centers", &centers), ("random", &random)] {
            let d = assumption_diagnostic(&synth.pool, params, tau, 3)?;
            println!(
                "tau {:<5} {name:<8} top-k {:>10.3e} {:>10.3e} {:>10.3e}  ratio {:.3e}",
                tau.value(),
                d.topk_mean_exp_sim[0],
                d.topk_mean_exp_sim[1],
                d.topk_mean_exp_sim[2],
                d.top1_ratio().unwrap()
            );
        }
    }
    Ok(())
}
