//! Reduced density matrices of resonating-valence-bond states on spin-1/2
//! ladders, computed by recursion over rung blocks and checked against an
//! exact state-vector oracle.

pub mod blocks;
pub mod cli_io;
pub mod density;
pub mod entanglement;
pub mod error;
pub mod even;
pub mod lattice;
pub mod odd;
pub mod oracle;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
