//! Phase-field topology optimization for incremental elastoplasticity with
//! linear kinematic hardening on 2D triangular meshes.

pub mod adjoint;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod forward;
pub mod material;
pub mod optimizer;
pub mod problem;

pub use error::{Error, SolverError};
