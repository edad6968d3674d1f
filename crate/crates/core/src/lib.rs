//! Dissipative quasi-locality of multipartite pure states.
//!
//! Given a pure state and a list of neighborhoods (subsets of subsystems),
//! the crate decides whether the state can be the unique fixed point of
//! quasi-local Markovian dynamics, computes the subspace that
//! any quasi-local stabilizer must leave invariant, and builds parent
//! Hamiltonians, Lindbladian stabilizers and reconstruction certificates.

pub mod dqls;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod locality;
pub mod multipartite;
pub mod reconstruction;
pub mod rng;
pub mod state;
pub mod tripartite;

pub use error::{DqlsError, Result};
