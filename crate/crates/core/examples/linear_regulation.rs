//! Asymptotic regulation when the ideal input lies in the model set: a
//! linear plant, harmonic exosystem and linear regressor. The estimate
//! converges to the parameter solving `theta^T Pi = c^T`.
//!
//! `cargo run --release --example linear_regulation`

use adaptive_regulator::harness::linear_steady_state_map;
use adaptive_regulator::numerics::{Matrix, Vector};
use adaptive_regulator::regulator::InternalModelConfig;
use adaptive_regulator::scenario::{simulate_scenario, IdentifierKind, PlantConfig, ScenarioConfig};

fn main() -> adaptive_regulator::Result<()> {
    let coupling = [1.0, 0.5];
    let mut cfg = ScenarioConfig::van_der_pol_default();
    cfg.plant = PlantConfig::LinearHarmonic { rho: 1.0, damping: [1.0, 1.0], coupling, x0: [0.1, 0.0], w0: [1.0, 0.0] };
    cfg.regulator.d_eta = Some(2);
    cfg.identifier.kind = IdentifierKind::Ls;
    cfg.identifier.omega_scale = 1e-6;
    let r = simulate_scenario(&cfg)?;

    let im = InternalModelConfig::bidiagonal(2, 1)?;
    let s = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let c = Matrix::from_row_slice(1, 2, &coupling);
    let pi = linear_steady_state_map(&s, &im.f, &im.g, &c)?;
    let theta_true = pi.transpose().lu().solve(&c.transpose()).expect("Pi is invertible");
    let theta = Vector::from_vec(r.summary.final_theta.clone());

    println!("steady-state max |y|   {:.3e}", r.summary.steady_state_max_y);
    println!("steady-state max eps*  {:.3e}", r.steady_state_max_eps_star.unwrap_or(f64::NAN));
    println!("theta                  {:?}", theta.as_slice());
    println!("theta_true             {:?}", theta_true.as_slice());
    println!("|theta - theta_true|   {:.3e}", (&theta - theta_true.column(0)).norm());
    Ok(())
}
