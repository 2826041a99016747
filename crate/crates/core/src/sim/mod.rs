//! Closed-loop simulation: reference generation, twist synthesis,
//! estimator-in-the-loop control and fixed-step RK4 integration of the
//! reduced-order plant.

mod measurement;
mod reference;
mod runner;

pub use measurement::{grasp_twist, synthesize_twists, NoiseSource, NoiseSpec};
pub use reference::{generate_reference, TrajectoryKind, TrajectorySpec};
pub use runner::{run, EstimatorSettings, SimConfig, SimError, SimLog, SimRecord, Simulator, MAX_STEPS};
