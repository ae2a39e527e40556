//! The closed-form EMD (mean distance to the nearest selected item) against
//! an exact min-cost transport solution.

use activeft::feature_store::{generate_synthetic, SyntheticSpec};
use activeft::matching::SelectionResult;
use activeft::metrics::{emd_closed_form, emd_lp_oracle, min_cost_transport};

fn main() -> activeft::Result<()> {
    let pool = generate_synthetic(&SyntheticSpec::new(3, 4, 5, 0.2, 3))?.pool;
    for picks in [vec![0], vec![0, 4], vec![1, 5, 9], vec![0, 3, 6, 10]] {
        let sel = SelectionResult::from_indices(picks.clone(), pool.n())?;
        let (closed, plan) = emd_closed_form(&pool, &sel)?;
        let exact = emd_lp_oracle(&pool, &sel)?;
        println!(
            "{picks:?}: closed form {closed:.12}, transport {exact:.12}, column mass {:?}",
            plan.column_marginals()
        );
    }

    // the solver also handles general integer supplies
    let cost = vec![vec![0.0, 2.0], vec![1.0, 0.5], vec![3.0, 1.0]];
    let (total, flow) = min_cost_transport(&[2, 1, 1], &[1, 3], &cost)?;
    println!("toy transport cost {total}, flow {flow:?}");
    Ok(())
}
