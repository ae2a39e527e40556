//! Generate a clustered pool, write it in both formats and read it back.
//!
//! cargo run --example synth_pool -- /tmp/pool.fpl

use std::path::PathBuf;

use activeft::feature_store::{generate_synthetic, load_pool, save_pool, PoolFormat, SyntheticSpec};
use activeft::model::cosine_sim;

fn main() -> activeft::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "pool.fpl".into());
    let synth = generate_synthetic(&SyntheticSpec::new(3, 10, 16, 0.05, 7))?;
    let pool = &synth.pool;

    let (mut within, mut across, mut nw, mut na) = (0.0, 0.0, 0, 0);
    for i in 0..pool.n() {
        for j in i + 1..pool.n() {
            let s = cosine_sim(pool.row(i), pool.row(j));
            if synth.labels[i] == synth.labels[j] {
                within += s;
                nw += 1;
            } else {
                across += s;
                na += 1;
            }
        }
    }
    println!("{} x {} pool", pool.n(), pool.dim());
    println!("mean cosine similarity: within clusters {:.4}, across {:.4}", within / nw as f64, across / na as f64);

    let out = PathBuf::from(out);
    let csv = out.with_extension("csv");
    save_pool(pool, &out, PoolFormat::Binary)?;
    save_pool(pool, &csv, PoolFormat::Csv)?;
    assert_eq!(&load_pool(&out, PoolFormat::Binary, false)?, pool);
    assert_eq!(&load_pool(&csv, PoolFormat::Csv, false)?, pool);
    println!("wrote {} and {}", out.display(), csv.display());
    Ok(())
}
