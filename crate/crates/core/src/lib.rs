//! 2D ion crystals in a hybrid DC-electrode and optical-cavity trap.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod lifetime;
pub mod matching;
pub mod modes;
pub mod optimize;
pub mod physics;
pub mod potential;
pub mod spin;
pub mod transition;

pub use error::{Error, Result};
