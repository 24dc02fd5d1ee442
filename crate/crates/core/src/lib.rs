//! Simulation, optimization and parameter fitting for inertial
//! electromagnetic vibration harvesters: a magnet on a compliant polymer
//! membrane moving over a fixed planar micro-coil.
//!
//! Module map:
//!
//! - [`device`]: parameter types and derived scalars
//! - [`magnetics`]: coil layout, resistance, cuboid magnet field, flux and `K = dPhi/dz`
//! - [`dynamics`]: RK4 time integration and directional frequency sweeps
//! - [`harmonic`]: first-harmonic Duffing response, backbone and jump frequencies
//! - [`electrical`]: output voltage, load optimization, power density, scaling studies
//! - [`fitting`]: multi-start simplex fitting and calibration of the prototype
//! - [`config`], [`cli`]: key-value configuration and the command-line front end

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod device;
pub mod dynamics;
pub mod electrical;
pub mod error;
pub mod exec;
pub mod fitting;
pub mod harmonic;
pub mod magnetics;

pub use error::{Error, Result};
pub use exec::Execution;
