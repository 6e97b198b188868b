//! The core process as a data generator: sample `(tau(w), u*(w))` at the
//! ticks of a random clock, feed a least-squares identifier and compare it
//! with the brute-force minimizer of its cost.
//!
//! `cargo run --release --example core_process`

use std::sync::Arc;

use adaptive_regulator::harness::{brute_force_cost_minimizer, run_core_process, CoreProcessRun, ExoSpec, VectorMap};
use adaptive_regulator::hybrid::ClockConfig;
use adaptive_regulator::identifier::{build_poly_regressor, Identifier, LinearModel, LsConfig, LsIdentifier, Regressor, RegressorMode};
use adaptive_regulator::numerics::{Matrix, Vector};

fn main() -> adaptive_regulator::Result<()> {
    let exo = ExoSpec::harmonic(1.0, Vector::from_vec(vec![1.0, 0.0]));
    let tau: VectorMap = Arc::new(|w: &Vector| Vector::from_vec(vec![w[0], w[1], w[0] * w[1]]));
    let ustar: VectorMap = Arc::new(|w: &Vector| Vector::from_element(1, w[0] - 0.5 * w[1] + w[0].powi(3)));
    let mut run = CoreProcessRun::new(ClockConfig::uniform_random(0.05, 0.2, 42), exo, tau, ustar);
    let samples = run_core_process(&mut run, 15.0, 1e-3, None)?;

    let reg = Arc::new(build_poly_regressor(3, 3, RegressorMode::FullMultiset)?);
    let n = reg.len();
    let mut id = LsIdentifier::new(LinearModel::new(reg.clone(), 1), LsConfig::diagonal(0.98, 1e-4, n))?;
    let pairs = run.pairs();
    let mut worst: f64 = 0.0;
    for (j, (eta, u)) in pairs.iter().enumerate() {
        id.jump(eta, u)?;
        let oracle = brute_force_cost_minimizer(&pairs[..=j], reg.as_ref(), 0.98, &Matrix::from_diagonal_element(n, n, 1e-4))?;
        worst = worst.max((id.theta() - &oracle).norm() / (1.0 + oracle.norm()));
    }
    let last = samples.last().expect("at least one tick");
    println!("{} ticks, last at t = {:.3} (j = {})", samples.len(), last.t, last.j);
    println!("regressor length {n}, max relative gap to the oracle {worst:.2e}");
    Ok(())
}
