//! Self-tuning control of two cooperative manipulators holding a rigid object.
//!
//! The crate identifies the unknown relative pose between the two grasps
//! online with two cascaded recursive estimators (attitude first, then
//! displacement), feeds the estimate to a minimum-norm inverse-dynamics
//! controller whose force-distribution matrix is invertible for every
//! parameter estimate, and provides the Lyapunov machinery that turns
//! plant bounds into stability margins. A fixed-step closed-loop simulator
//! ties the pieces together.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command
//! line live in the companion `coopkin` crate.
//!
//! Matrix layout: all vectors are nalgebra column vectors. Twists stack as
//! `[linear; angular]`, quaternions as `[vector; scalar]`, object poses as
//! `[position; XYZ Euler angles]` and error states as `[e; ė]`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
pub mod dynamics;
mod error;
pub mod estimation;
mod linalg;
pub mod rigidmotion;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};

use nalgebra::{SMatrix, SVector};

pub type Vec3 = SVector<f64, 3>;
pub type Vec4 = SVector<f64, 4>;
pub type Vec6 = SVector<f64, 6>;
pub type Vec12 = SVector<f64, 12>;
pub type Mat3 = SMatrix<f64, 3, 3>;
pub type Mat4 = SMatrix<f64, 4, 4>;
pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Mat6x12 = SMatrix<f64, 6, 12>;
pub type Mat12x6 = SMatrix<f64, 12, 6>;
