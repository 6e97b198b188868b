//! Van der Pol tracking of a triangular wave: no internal model versus
//! least-squares identifiers of increasing order.
//!
//! `cargo run --release --example vdp_tracking -- [horizon] [csv_dir]`

use std::f64::consts::PI;
use std::path::PathBuf;

use adaptive_regulator::scenario::{run_scenario, IdentifierKind, PlantConfig, ScenarioConfig};

fn main() -> adaptive_regulator::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: f64 = args.next().map_or(100.0, |s| s.parse().expect("horizon in seconds"));
    let csv_dir = args.next().map(PathBuf::from);

    let mut base = ScenarioConfig::van_der_pol_default();
    // reference amplitude 1
    if let PlantConfig::VanDerPol { w0, .. } = &mut base.plant {
        *w0 = [1.0 / PI, 0.0];
    }
    base.sim.horizon = horizon;

    let mut baseline = None;
    println!("{:>10} {:>14} {:>12} {:>8}", "case", "max |y| (ss)", "settling s", "ratio");
    for order in [None, Some(1), Some(3)] {
        let mut cfg = base.clone();
        let name = match order {
            None => "psi = 0".to_string(),
            Some(n) => {
                cfg.identifier.kind = IdentifierKind::Ls;
                cfg.identifier.order = n;
                format!("LS N={n}")
            }
        };
        if let Some(dir) = &csv_dir {
            cfg.output.csv = Some(dir.join(format!("vdp_{}.csv", order.unwrap_or(0))));
        }
        let r = run_scenario(&cfg)?;
        let ss = r.summary.steady_state_max_y;
        let e0 = *baseline.get_or_insert(ss);
        println!("{name:>10} {ss:>14.3e} {:>12.1} {:>8.1}", r.summary.settling_time_s, e0 / ss);
    }
    Ok(())
}
