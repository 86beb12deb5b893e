//! Core numerics for turning 2D drawings into full-state quadrotor trajectories.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the rigid-body model
//! with magnet and sliding-friction contact forces, RK4 discretization and hover
//! linearization, a condensed box-constrained MPC quadratic program, waypoint
//! path generation, and the receding-horizon simulation loop.
//!
//! File formats, the command-line front end and anything touching the
//! filesystem live in the companion `drawmpc` crate.

#![no_std]
#![allow(non_snake_case)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod discretize;
pub mod error;
mod math;
pub mod model;
pub mod mpc;
pub mod qp;
pub mod trajgen;

pub use discretize::{
    dlqr_gain, equilibrium_residual, hover_equilibrium, linearize, rk4_step, spectral_radius,
    LinearModel,
};
pub use error::{Error, Result};
pub use model::{
    body_torques, continuous_dynamics, friction_force, magnet_force, quat_kinematics,
    quat_to_rotmat, thrust_force_body, ControlInput, MagnetMode, ModelParams, State,
};
pub use mpc::{run_simulation, tracking_errors, MpcController, SimResult, StepStats, TrackingErrors};
pub use qp::{condense, solve_box_qp, BoxQpSolution, CondensedQp, MpcConfig, QpProblem, QpSolution};

/// Number of state components: position (3), quaternion (4), velocity (3), angular velocity (3).
pub const NX: usize = 13;
/// Number of motor commands.
pub const NU: usize = 4;

pub type StateVector = nalgebra::SVector<f64, NX>;
pub type InputVector = nalgebra::SVector<f64, NU>;
pub type StateMatrix = nalgebra::SMatrix<f64, NX, NX>;
pub type InputMatrix = nalgebra::SMatrix<f64, NX, NU>;
