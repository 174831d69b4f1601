//! Attractive points of nonlinear mappings on R^d.
//!
//! The crate builds polyhedral outer approximations of the attractive set
//! `A(T) = {z : |Tx - z| <= |x - z| for all x in C}`, the quasinonexpansive
//! extension of a mapping whose fixed-point set equals `A(T)`, and Cesàro-mean
//! iterations `z_n = (1/n) Σ T^k x` with convergence diagnostics.
//!
//! Modules, bottom-up:
//!
//! - [`hilbert`]: points, convex sets, closed-form projections, Dykstra, grid oracle.
//! - [`mappings`]: the mapping abstraction, the built-in catalog, residual checkers.
//! - [`attractive_set`]: halfspace approximation of `A(T)`, fixed-point search,
//!   projection identities.
//! - [`extension`]: the extended mapping and its verification sweeps.
//! - [`ergodic`]: orbits, Cesàro means, projection trajectories, reports.
//! - [`cli`]: config-driven experiment runner.

pub mod attractive_set;
pub mod cli;
pub mod ergodic;
mod error;
pub mod extension;
pub mod hilbert;
pub mod mappings;
pub mod par;

pub use error::{Error, Result};
pub use hilbert::Point;
