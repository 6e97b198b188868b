//! Structural design of the regulator: stabilizer poles, observer gains and
//! the default internal model.
//!
//! `cargo run --example regulator_design`

use adaptive_regulator::numerics::{is_controllable, is_hurwitz, place_poles};
use adaptive_regulator::regulator::{build_observer_gains, closed_loop_poles, observer_roots, InternalModelConfig, ObserverConfig};

fn main() -> adaptive_regulator::Result<()> {
    let k = place_poles(2, 1, &[-1.0, -2.0])?;
    println!("K = {:?}, poles of A - BK: {:?}", k.as_slice(), closed_loop_poles(&k, 2, 1)?);

    let obs = ObserverConfig { ell: 20.0, h_coeffs: vec![vec![6.0, 11.0, 6.0]], psi_bar: 100.0 };
    println!("observer roots {:?}", observer_roots(&obs)?);
    let gains = build_observer_gains(&obs, 2, 1)?;
    println!("Lambda(ell) H = {:?}, ell^3 h3 = {:?}", gains.lambda_h.as_slice(), (gains.h_last * gains.ell_top).as_slice());

    let im = InternalModelConfig::bidiagonal(6, 1)?;
    println!("F =\n{}G = {:?}", im.f, im.g.as_slice());
    println!("Hurwitz {}, controllable {}", is_hurwitz(&im.f)?, is_controllable(&im.f, &im.g)?);
    Ok(())
}
