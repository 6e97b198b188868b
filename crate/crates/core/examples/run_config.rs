//! Load a JSON scenario and run it, writing the configured CSV and summary.
//!
//! `cargo run --release --example run_config -- crates/core/examples/configs/vdp_ls.json`

use adaptive_regulator::scenario::{run_scenario, ScenarioConfig};

fn main() -> adaptive_regulator::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/vdp_ls.json").into());
    let cfg = ScenarioConfig::load(path.as_ref())?;
    let r = run_scenario(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&r.summary)?);
    Ok(())
}
