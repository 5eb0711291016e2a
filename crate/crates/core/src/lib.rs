//! Analysis and simulation of photoluminescence from a quantum dot strongly
//! coupled to a photonic-crystal nanocavity.
//!
//! Spectra are modeled as two polariton Lorentzians plus a bare-cavity line
//! fed by detuned charge configurations. The crate fits that triplet, turns
//! the fit into a vacuum Rabi frequency, Q factor and cavity-emission ratio S,
//! analyzes S across pump power, and generates seeded synthetic spectra.

// `!(x > 0.0)` is the NaN-rejecting form used throughout input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod feeding;
pub mod fitting;
pub mod io;
pub mod model;
pub mod simulator;
pub mod units;

pub use error::{Error, Result};
