//! Generate the synthetic benchmark and show the class balance.
//!
//! cargo run --example gen_data -- [n] [seed]

use greenshield::dataset::{synth, write_csv, Label};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(500), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(42), |s| s.parse())?;

    let records = synth::generate(n, seed)?;
    let fire = records.iter().filter(|r| r.class == Label::Fire).count();
    println!("{n} rows, {fire} fire / {} not fire", n - fire);

    for label in [Label::Fire, Label::NotFire] {
        let p = synth::profile(label);
        println!(
            "{:>8}: temp N({}, {}) rh N({}, {}) oxy N({}, {})",
            label.as_str(),
            p.temp.mean, p.temp.sd, p.rh.mean, p.rh.sd, p.oxy.mean, p.oxy.sd
        );
    }

    // first few rows, same layout as the CSV file
    write_csv(&records[..5], std::io::stdout())?;
    Ok(())
}
