//! Lagrangian simulator and verification tools for the free-boundary
//! relativistic Euler equations with a physical vacuum boundary.

pub mod cli_io;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod grid;
pub mod initial_data;
pub mod integrator;
pub mod kinematics;
pub mod mat4;
pub mod operators;

pub use error::{Error, Result};
pub mod verify;
