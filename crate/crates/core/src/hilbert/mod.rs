//! Points, closed convex sets and metric projections in R^d.

mod dykstra;
mod oracle;
mod point;
mod sets;

pub use dykstra::{dykstra_project, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
pub use oracle::brute_force_project;
pub use point::{inner, Point};
pub use sets::{AffineSet, Ball, BoxSet, ConvexSet, Halfspace, ProjectionResult};

/// Projects `x` onto `set`.
pub fn project(set: &ConvexSet, x: &Point) -> crate::Result<ProjectionResult> {
    set.project(x)
}
