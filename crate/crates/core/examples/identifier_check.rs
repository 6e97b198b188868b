//! Check optimality, stability and regularity of three identifiers on the
//! same core process. The identifier without forgetting is expected to fail
//! the stability check.
//!
//! `cargo run --release --example identifier_check`

use std::sync::Arc;

use adaptive_regulator::harness::{
    internal_model_core_process, run_core_process, verify_identifier_requirement, ExoSpec, ForgetlessIdentifier,
    IdentifierReport, VectorMap,
};
use adaptive_regulator::hybrid::ClockConfig;
use adaptive_regulator::identifier::{
    build_poly_regressor, LinearModel, LsConfig, LsIdentifier, MiniBatchIdentifier, Regressor, RegressorMode,
    RidgeBatchSolver,
};
use adaptive_regulator::numerics::{Matrix, Vector};
use adaptive_regulator::plant::{build_vdp_scenario, NormalFormPlant};
use adaptive_regulator::regulator::InternalModelConfig;

fn show(name: &str, r: &IdentifierReport) {
    println!(
        "{name:<12} optimality {:<5} stability {:<5} regularity {:<5} j* {:<3} err {:.1e} residual {:.1e}",
        r.optimality, r.stability, r.regularity, r.j_star, r.optimality_error, r.memory_residual
    );
}

fn main() -> adaptive_regulator::Result<()> {
    let plant = Arc::new(build_vdp_scenario(2.0, 2.0)?);
    let w0 = Vector::from_vec(vec![1.0 / std::f64::consts::PI, 0.0]);
    let ustar: VectorMap = {
        let p = plant.clone();
        Arc::new(move |w: &Vector| p.ideal_feedforward(w).expect("closed-form u*"))
    };
    let exo = ExoSpec::harmonic(2.0, w0);
    let im = InternalModelConfig::bidiagonal(6, 1)?;
    let mut run = internal_model_core_process(ClockConfig::periodic(0.1), exo, ustar, &im, 30.0, 1e-3)?;
    run_core_process(&mut run, 20.0, 1e-3, None)?;
    println!("{} samples from the core process", run.samples.len());

    let reg: Arc<dyn Regressor> = Arc::new(build_poly_regressor(6, 1, RegressorMode::FullMultiset)?);
    let n = reg.len();
    let model = LinearModel::new(reg.clone(), 1);

    let ls = LsIdentifier::new(model.clone(), LsConfig::diagonal(0.99, 1e-3, n))?;
    show("LS", &verify_identifier_requirement(&ls, &run, 4, 1)?);

    let solver = Arc::new(RidgeBatchSolver::new(reg, Matrix::from_diagonal_element(n, n, 1e-3)));
    let mb = MiniBatchIdentifier::new(20, Arc::new(model.clone()), solver)?;
    show("mini-batch", &verify_identifier_requirement(&mb, &run, 4, 1)?);

    show("forgetless", &verify_identifier_requirement(&ForgetlessIdentifier::new(model), &run, 4, 1)?);
    Ok(())
}
