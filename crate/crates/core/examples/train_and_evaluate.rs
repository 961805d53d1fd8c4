//! Full offline pipeline on the synthetic benchmark: clean, split, train the
//! three classifiers, compare them and write the artifacts.
//!
//! cargo run --release --example train_and_evaluate -- [out_dir]

use greenshield::dataset::synth;
use greenshield::metrics::render_table;
use greenshield::models::TrainConfig;
use greenshield::pipeline::{train_all, write_artifacts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "models".into());

    let records = synth::generate(500, 42)?;
    let cfg = TrainConfig::default();
    let outcome = train_all(&records, &cfg)?;

    println!(
        "train {} / test {} (seed {})",
        outcome.split.train.len(),
        outcome.split.test.len(),
        cfg.seed
    );
    print!("{}", render_table(&outcome.reports));

    let manifest = write_artifacts(&outcome, out.as_ref(), None)?;
    println!("selected {} -> {}/{}", manifest.kind, out, manifest.model_file);
    Ok(())
}
