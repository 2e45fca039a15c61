//! Hamilton–Jacobi equations on networks: critical values, Aubry sets,
//! a semi-Lagrangian time-marching scheme and its long-time behavior.

pub mod asymptotics;
pub mod eikonal;
pub mod evolution;
pub mod error;
pub mod fixtures;
pub mod flux;
pub mod grid;
pub mod hamiltonian;
pub mod network;
pub mod par;
pub mod reparam;
pub mod scenario;

pub use error::{Error, Result};
