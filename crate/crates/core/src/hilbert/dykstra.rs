//! Dykstra's alternating projection algorithm for intersections.

use super::point::Point;
use super::sets::{ConvexSet, ProjectionResult, FEASIBILITY_TOL};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Member set prepared for in-place projection.
enum Prepared<'a> {
    /// Unit normal and offset.
    Half(Vec<f64>, f64),
    Other(&'a ConvexSet),
}

impl Prepared<'_> {
    fn new(set: &ConvexSet) -> Prepared<'_> {
        if let ConvexSet::Halfspace(h) = set {
            let s = h.normal().scaled_norm();
            if s > 0.0 {
                let unit = h.normal().coords().iter().map(|c| c / s).collect();
                return Prepared::Half(unit, h.offset() / s);
            }
        }
        Prepared::Other(set)
    }

    /// Projects `y` onto the set, writing the result into `out`.
    fn project_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Prepared::Half(a, b) => {
                let excess = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>() - b;
                if excess > 0.0 {
                    for ((o, yi), ai) in out.iter_mut().zip(y).zip(a) {
                        *o = yi - excess * ai;
                    }
                } else {
                    out.copy_from_slice(y);
                }
            }
            Prepared::Other(set) => {
                let p = set.project(&Point::raw(y.to_vec()))?.point;
                out.copy_from_slice(p.coords());
            }
        }
        Ok(())
    }
}

fn flatten<'a>(sets: &'a [ConvexSet], out: &mut Vec<&'a ConvexSet>) {
    for s in sets {
        match s {
            ConvexSet::Intersection(inner) => flatten(inner, out),
            ConvexSet::WholeSpace(_) => {}
            other => out.push(other),
        }
    }
}

/// Projects `x` onto the intersection of `sets`.
///
/// A sweep visits every set once. The run stops when both the sweep
/// displacement of the iterate and the change of the correction terms are
/// at most `tol`, or after `max_sweeps` sweeps with `converged = false`.
/// The final iterate must lie within [`FEASIBILITY_TOL`] of every set,
/// otherwise the intersection is reported infeasible.
pub fn dykstra_project(
    sets: &[ConvexSet],
    x: &Point,
    max_sweeps: usize,
    tol: f64,
) -> Result<ProjectionResult> {
    if max_sweeps == 0 {
        return Err(Error::Precondition("max_sweeps must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    if sets.is_empty() {
        return Err(Error::EmptyInput("dykstra_project needs at least one set"));
    }
    for s in sets {
        x.check_dim(s.dim())?;
    }

    let mut flat = Vec::with_capacity(sets.len());
    flatten(sets, &mut flat);
    match flat.len() {
        0 => return Ok(ProjectionResult::exact(x.clone())),
        1 => return flat[0].project(x),
        _ => {}
    }

    let prepared: Vec<Prepared<'_>> = flat.iter().map(|s| Prepared::new(s)).collect();
    let dim = x.dim();
    let mut current = x.coords().to_vec();
    let mut increments = vec![vec![0.0; dim]; flat.len()];
    let mut shifted = vec![0.0; dim];
    let mut projected = vec![0.0; dim];
    let mut start = vec![0.0; dim];
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;

    while sweeps < max_sweeps {
        sweeps += 1;
        start.copy_from_slice(&current);
        let mut increment_change = 0.0;
        for (set, inc) in prepared.iter().zip(increments.iter_mut()) {
            for k in 0..dim {
                shifted[k] = current[k] + inc[k];
            }
            set.project_into(&shifted, &mut projected)?;
            for k in 0..dim {
                let new_inc = shifted[k] - projected[k];
                increment_change += (new_inc - inc[k]) * (new_inc - inc[k]);
                inc[k] = new_inc;
            }
            current.copy_from_slice(&projected);
        }
        let displacement = super::point::dist(&start, &current);
        residual = displacement.max(increment_change.sqrt());
        if residual <= tol {
            converged = true;
            break;
        }
    }

    let point = Point::raw(current);
    if !point.is_finite() {
        return Err(Error::NonFinite("Dykstra iterate".into()));
    }
    let violation = flat.iter().map(|s| s.violation(&point)).fold(0.0, f64::max);
    if violation > FEASIBILITY_TOL {
        return Err(Error::Infeasible { violation, sweeps });
    }
    Ok(ProjectionResult { point, converged, iterations: sweeps, residual })
}
