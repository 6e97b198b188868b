//! Closed loop with the moving-window identifier and a randomly timed clock.
//!
//! `cargo run --release --example mini_batch -- [window]`

use std::f64::consts::PI;

use adaptive_regulator::hybrid::ClockConfig;
use adaptive_regulator::scenario::{simulate_scenario, IdentifierKind, PlantConfig, ScenarioConfig};

fn main() -> adaptive_regulator::Result<()> {
    let window: usize = std::env::args().nth(1).map_or(40, |s| s.parse().expect("window length"));
    let mut cfg = ScenarioConfig::van_der_pol_default();
    if let PlantConfig::VanDerPol { w0, .. } = &mut cfg.plant {
        *w0 = [1.0 / PI, 0.0];
    }
    cfg.clock = ClockConfig::uniform_random(0.05, 0.15, 7);
    cfg.identifier.kind = IdentifierKind::MiniBatch;
    cfg.identifier.window = window;
    let r = simulate_scenario(&cfg)?;
    println!("window {window}: {} jumps", r.summary.jumps_total);
    println!("steady-state max |y| {:.3e}, settling {:.1} s", r.summary.steady_state_max_y, r.summary.settling_time_s);
    println!("max |u| {:.2} (bound {:.0}), max |psi| {:.2} (bound {:.0})", r.max_u, r.u_bound, r.max_psi, r.psi_bar);
    Ok(())
}
