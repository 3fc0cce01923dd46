//! Decoherence of an rf-SQUID flux qubit under random telegraph flux noise.
//!
//! The full double-well Hamiltonian is evolved in a truncated oscillator
//! basis for many noise realizations; the averaged state is projected onto
//! the lowest doublet and compared with the damped Bloch equation.
//!
//! Units: hbar = 1 throughout; times are inverse energies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bloch;
pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod io;
pub mod noise;
pub mod potential;
pub mod propagate;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::C64;
