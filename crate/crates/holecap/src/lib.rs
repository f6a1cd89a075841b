//! Dirichlet eigenvalues of planar domains with small removed sets.
//!
//! The crate computes condenser capacities and u-capacities on uniform
//! five-point grids, the exact elliptic/disk capacity series they are compared
//! against, eigenvalue shifts caused by removing a small compact set, and the
//! lattice Aharonov–Bohm operator with two half-flux poles together with its
//! mixed Dirichlet/Neumann sector operators.

pub mod aharonov_bohm;
pub mod asymptotics;
pub mod capacity;
pub mod closed_form;
pub mod discrete;
pub mod error;
pub mod geometry;
pub mod local_expansion;
pub mod par;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{CompactSet, Domain, Point};
