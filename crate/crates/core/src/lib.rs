//! Statevector laboratory for fermionic QAOA on portfolio optimization.
//!
//! Assets sit on the rungs of an `N x D` ladder, one qubit per bit of each
//! asset's position. The budget constraint becomes conservation of particle
//! number, which the fermionic mixer keeps exactly.

pub mod analysis;
pub mod ansatz;
pub mod baselines;
pub mod error;
pub mod evolution;
pub mod jw;
pub mod ladder;
pub mod linalg;
pub mod operators;
pub mod optimize;
pub mod problem;
pub mod run;
pub mod schedule;
pub mod sim;
pub mod stateprep;

pub use error::{Error, Result};
pub use jw::LatticeShape;
pub use problem::{DiagonalHamiltonian, PortfolioInstance};
pub use sim::{Circuit, Gate, GateCounts, StateVector};
