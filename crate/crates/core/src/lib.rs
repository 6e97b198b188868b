//! Adaptive internal-model output regulation for normal-form plants.
//!
//! The regulator combines a saturated stabilizer, an internal model unit
//! `eta' = F eta + G u`, an extended high-gain observer and a discrete-time
//! identifier that is updated at the ticks of a hybrid clock. The closed loop
//! is simulated as a hybrid system.

pub mod closed_loop;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod identifier;
pub mod numerics;
pub mod plant;
pub mod regulator;
pub mod scenario;

pub use error::{Error, Result};
