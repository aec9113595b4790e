//! Qutrit state transfer across a chain of tunably coupled transmons.
//!
//! The crate covers the full pipeline: building rotating-frame Hamiltonians
//! ([`model`]), designing trapezoidal coupling pulses that swap the single-
//! and double-excitation subspaces at the same time ([`pulse`]), simulating
//! and scoring the two-qutrit transfer ([`transfer`]), concatenating it along
//! a chain ([`chain`]), idle decoherence ([`noise`]) and the error-scaling
//! fits ([`analysis`]).
//!
//! Units: public APIs take frequencies in cyclic MHz and times in ns.
//! Matrices returned by the Hamiltonian builders are angular (rad/ns).

// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chain;
pub mod error;
pub mod model;
pub mod noise;
pub mod numerics;
pub mod pulse;
pub mod qcore;
pub mod transfer;

pub use error::{QstError, Result};
