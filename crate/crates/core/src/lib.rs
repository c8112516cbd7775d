//! Quantum discord and entanglement of two-qubit states, the XXZ dimer in
//! thermal equilibrium, and a simulator for the electron–nuclear spin pair
//! used to prepare and tomograph Bell-diagonal states.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlations;
pub mod error;
pub mod numerics;
pub mod spinsim;
pub mod states;
pub mod tomography;
pub mod xxzmodel;

pub use error::{Error, Result};
