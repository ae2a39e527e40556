//! Compare the analytic loss gradient with central differences taken along
//! directions tangent to the sphere.

use activeft::feature_store::{generate_synthetic, SyntheticSpec};
use activeft::model::{assign, SelectionParams};
use activeft::optimizer::{compute_loss, init_params, loss_gradient, OptimizerConfig, Regularizer};

fn main() -> activeft::Result<()> {
    let pool = generate_synthetic(&SyntheticSpec::new(4, 5, 8, 0.3, 2))?.pool;
    let h = 1e-5;
    for regularizer in [Regularizer::ActiveFt, Regularizer::NoneS1, Regularizer::InfoNceS2] {
        let config = OptimizerConfig {
            regularizer,
            ..OptimizerConfig::default()
        };
        let params = init_params(&pool, 4, 9)?;
        let a = assign(&pool, &params)?;
        let grad = loss_gradient(&pool, &params, &config, &a)?;

        let mut worst: f64 = 0.0;
        for coord in 0..params.as_slice().len() {
            // unit direction along one coordinate, minus its radial part
            let row = coord / params.dim();
            let mut v = vec![0.0; params.as_slice().len()];
            v[coord] = 1.0;
            let t = params.row(row);
            for (k, x) in t.iter().enumerate() {
                v[row * params.dim() + k] -= t[coord % params.dim()] * x;
            }
            let loss_at = |s: f64| -> activeft::Result<f64> {
                let raw = params.as_slice().iter().zip(&v).map(|(p, d)| p + s * d).collect();
                Ok(compute_loss(&pool, &SelectionParams::new(params.dim(), raw)?, &config, &a)?.total)
            };
            let numeric = (loss_at(h)? - loss_at(-h)?) / (2.0 * h);
            let analytic: f64 = grad.iter().zip(&v).map(|(g, d)| g * d).sum();
            worst = worst.max((numeric - analytic).abs() / analytic.abs().max(1.0));
        }
        println!("{regularizer:?}: worst relative difference {worst:.2e}");
    }
    Ok(())
}
