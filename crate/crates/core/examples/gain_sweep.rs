//! Practical regulation: the steady-state error of the non-adaptive loop
//! shrinks as the observer gain grows.
//!
//! `cargo run --release --example gain_sweep`

use adaptive_regulator::scenario::{is_non_increasing, run_sweep, ScenarioConfig, SweepAxis};

fn main() -> adaptive_regulator::Result<()> {
    let mut cfg = ScenarioConfig::van_der_pol_default();
    cfg.sim.horizon = 60.0;
    let rows = run_sweep(&cfg, SweepAxis::Ell, &[5.0, 10.0, 20.0, 40.0])?;
    println!("{:>6} {:>14} {:>12}", "ell", "max |y| (ss)", "settling s");
    for row in &rows {
        match (&row.error, row.steady_state_max_y, row.settling_time_s) {
            (None, Some(y), Some(t)) => println!("{:>6} {y:>14.3e} {t:>12.2}", row.value),
            (err, ..) => println!("{:>6} failed: {}", row.value, err.as_deref().unwrap_or("?")),
        }
    }
    println!("non-increasing within 5%: {}", is_non_increasing(&rows, 0.05));
    Ok(())
}
