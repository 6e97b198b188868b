//! The hybrid engine on its own: a harmonic oscillator whose state is
//! halved at each tick of a random clock.
//!
//! `cargo run --example hybrid_clock`

use adaptive_regulator::hybrid::{simulate, ClockConfig};
use adaptive_regulator::numerics::Vector;

fn main() -> adaptive_regulator::Result<()> {
    let clock = ClockConfig::uniform_random(0.5, 1.5, 1);
    let arc = simulate(
        |x| Vector::from_vec(vec![x[1], -x[0]]),
        |x| x * 0.5,
        Vector::from_vec(vec![1.0, 0.0]),
        &clock,
        6.0,
        1e-3,
    )?;
    arc.validate(&clock)?;
    for &i in &arc.jump_indices {
        let (pre, post) = (&arc.samples[i - 1], &arc.samples[i]);
        println!(
            "jump {} at t = {:.4}: |x| {:.4} -> {:.4}",
            post.0.j,
            post.0.t,
            pre.1.norm(),
            post.1.norm()
        );
    }
    println!("{} samples, final state {:?}", arc.samples.len(), arc.final_state().map(|x| x.as_slice().to_vec()));
    Ok(())
}
