//! Simulation and estimation toolkit for sensing a high-frequency AC field
//! with two interacting qubits.
//!
//! The field rescales the qubit-qubit coupling by A = J₀(4b/ω); the crate
//! propagates the exact two-qubit dynamics, evaluates the effective model,
//! computes classical and quantum Fisher information with and without
//! noise, and simulates dynamical-decoupling pulses under classical noise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod measurement;
pub mod model;
pub mod noise;
pub mod qla;

pub use error::{Error, Result};
