//! Simulation and control optimization of a controlled-phase gate between
//! dual-rail photonic qubits, built from a cavity that dynamically loads a
//! photon wave packet into a storage mode coupled to a two-level emitter.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod controls;
pub mod dephasing;
pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod fom;
pub mod gate;
pub mod io;
pub mod model;
pub mod observables;
pub mod optimizer;
pub mod quadrature;

pub use error::{Error, Result};
