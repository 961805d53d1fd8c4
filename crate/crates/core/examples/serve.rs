//! Start the HTTP service on a free port with a freshly trained model, talk
//! to it once per endpoint, then shut it down.
//!
//! cargo run --release --example serve

use greenshield::dataset::synth;
use greenshield::models::TrainConfig;
use greenshield::pipeline::{train_all, write_artifacts};
use greenshield::service::{spawn, ServiceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("greenshield-serve-example");
    let outcome = train_all(&synth::generate(500, 42)?, &TrainConfig::default())?;
    write_artifacts(&outcome, &dir, None)?;

    let mut config = ServiceConfig::new();
    config.port = 0;
    config.model = Some(dir.clone());
    let server = spawn(config)?;
    println!("listening on {}", server.local_addr());

    let post = |path: &str, body: &str| -> Result<String, ureq::Error> {
        let mut resp = ureq::post(&server.url(path))
            .config()
            .http_status_as_error(false)
            .build()
            .content_type("application/json")
            .send(body)?;
        Ok(format!("{} {}", resp.status(), resp.body_mut().read_to_string()?))
    };

    println!("{}", post("/api/v1/predict", r#"{"temp": 45, "rh": 12, "oxy": 30}"#)?.trim_end());
    println!("{}", post("/api/v1/predict", r#"{"temp": 30, "rh": 140, "oxy": 21}"#)?);
    println!(
        "{}",
        post(
            "/api/v1/telemetry",
            r#"{"node_id": "n1", "ts_ms": 1717200000000, "temp": 31.5, "rh": 30, "oxy": 21, "flame": true}"#
        )?
    );
    let alerts = ureq::get(&server.url("/api/v1/alerts?limit=1"))
        .call()?
        .body_mut()
        .read_to_string()?;
    println!("{alerts}");
    let model = ureq::get(&server.url("/api/v1/model")).call()?.body_mut().read_to_string()?;
    println!("{}...", &model[..model.len().min(120)]);

    server.shutdown()?;
    Ok(())
}
