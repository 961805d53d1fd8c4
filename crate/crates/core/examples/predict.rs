//! Train a model in memory and score a few readings with it.
//!
//! cargo run --release --example predict

use greenshield::dataset::{synth, FeatureVector};
use greenshield::models::{self, ModelKind, TrainConfig, TrainingData};
use greenshield::pipeline::prepare;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TrainConfig::default();
    let split = prepare(&synth::generate(500, 42)?, cfg.seed)?;
    let data = TrainingData::from_samples(&split.train)?;

    let readings = [
        (45.0, 12.0, 30.0),
        (36.0, 35.0, 23.1),
        (31.0, 47.5, 22.0),
        (24.0, 70.0, 20.9),
    ];
    for kind in ModelKind::ALL {
        let model = models::train(kind, &data, &cfg)?;
        println!("{}", kind.display_name());
        for &(t, h, o) in &readings {
            let p = model.predict(&FeatureVector::new(t, h, o)?);
            println!(
                "  temp={t:>4} rh={h:>4} oxy={o:>4}  p={:.4}  {}",
                p.probability,
                p.label.as_str()
            );
        }
    }
    Ok(())
}
