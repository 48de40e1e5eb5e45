//! Gaussian simulation of graph-state preparation in a cavity coupled to
//! several mechanical resonators by Hamiltonian switching.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod model;
pub mod numerics;
pub mod protocol;

pub use error::{Error, Result};
