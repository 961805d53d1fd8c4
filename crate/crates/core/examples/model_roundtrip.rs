//! Save each model kind to JSON, load it back and compare predictions.
//!
//! cargo run --release --example model_roundtrip

use greenshield::dataset::synth;
use greenshield::models::{self, from_json, to_json, ModelKind, TrainConfig, TrainingData};
use greenshield::pipeline::{model_version, prepare};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = TrainConfig::default();
    cfg.forest.n_trees = 20;
    let split = prepare(&synth::generate(300, 9)?, cfg.seed)?;
    let data = TrainingData::from_samples(&split.train)?;

    for kind in ModelKind::ALL {
        let model = models::train(kind, &data, &cfg)?;
        let text = to_json(&model);
        let back = from_json(&text)?;
        let same = split.test.iter().all(|s| {
            let x = s.features.to_array();
            model.predict_probability(&x).unwrap().to_bits()
                == back.predict_probability(&x).unwrap().to_bits()
        });
        println!(
            "{:<20} {:>7} bytes  {}  identical={same}",
            kind.as_str(),
            text.len(),
            model_version(kind, &text)
        );
    }
    Ok(())
}
