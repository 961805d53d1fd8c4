//! Replay the bundled two-node scenario and print the SMS texts.
//!
//! cargo run --example edge_simulation -- [script.json]

use greenshield::edge::{run_scenario, AlertKind, MemorySink, ScenarioScript};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo_scenario.json").to_string()
    });
    let script = ScenarioScript::load(&path)?;
    println!(
        "{} nodes, {} readings, warmup {} k {}",
        script.nodes.len(),
        script.readings().len(),
        script.threshold.warmup,
        script.threshold.k
    );

    let sink = MemorySink::new();
    let log = run_scenario(&script, &[&sink])?;
    for e in sink.events() {
        if e.kind == AlertKind::Sms {
            println!("{}", e.message.unwrap_or_default());
        }
    }
    println!("{} log entries, {} delivery failures", log.entries.len(), log.failures());
    Ok(())
}
