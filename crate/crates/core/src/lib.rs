//! Simulation and analysis of resonator-assisted dissipative state
//! preparation for a driven flux qubit.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod optimize;
pub mod operators;
pub mod tcl;
pub mod units;

pub use error::{Error, Result};
