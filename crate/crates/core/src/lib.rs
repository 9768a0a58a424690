//! Distributed optimal power flow for unbalanced radial distribution feeders.
//!
//! The relaxed OPF is split per bus into an ADMM scheme where every agent
//! solves closed-form or small-eigendecomposition subproblems and talks only
//! to its parent and children.

pub mod admm;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod network;
pub mod solution;
pub mod subproblem;
pub mod verify;

pub use error::{Error, Result};
