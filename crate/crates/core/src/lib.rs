//! Permutation-aware compilation of 2-local Hamiltonian simulation and QAOA
//! circuits onto connectivity-constrained devices.

pub mod benchgen;
pub mod circuit_text;
pub mod error;
pub mod ir;
pub mod linalg;
pub mod pipeline;
pub mod placement;
pub mod router;
pub mod scheduler;
pub mod seed;
pub mod simcheck;
pub mod synth;
pub mod topology;
pub mod unifier;

pub use error::{Error, Result};
