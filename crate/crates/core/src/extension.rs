//! The quasinonexpansive extension `T̃` of a mapping with an attractive point.
//!
//! `T̃` agrees with `T` on `D = [C \ F(T)] ∪ [F(T) ∩ A(T)]` and with the
//! projection onto `A(T)` everywhere else, so its fixed-point set is `A(T)`.
//! Here `A(T)` is replaced by an [`AttractiveApprox`] and `F(T)` by the
//! tolerance test `|Tx - x| <= tol`.

use crate::attractive_set::{AttractiveApprox, FixedSetApprox};
use crate::error::{Error, Result};
use crate::hilbert::Point;
use crate::mappings::{Mapping, ResidualReport};
use crate::par;

/// Width of the boundary-ambiguous band as a multiple of the tolerance.
pub const AMBIGUOUS_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `x ∈ D`, evaluate `T`.
    Base,
    /// `x ∉ D`, project onto the approximation.
    Projection,
}

/// `T̃`, defined on all of `R^d`.
#[derive(Clone, Debug)]
pub struct ExtendedMapping {
    base: Mapping,
    approx: AttractiveApprox,
    fixed: FixedSetApprox,
    tol: f64,
}

/// Builds `T̃` from `T`, an approximation of `A(T)` and the fixed points found.
pub fn extend(t: &Mapping, approx: AttractiveApprox, fixed: FixedSetApprox, tol: f64) -> Result<ExtendedMapping> {
    if approx.is_whole_space() {
        return Err(Error::WholeSpaceApprox);
    }
    if approx.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: approx.dim() });
    }
    Ok(ExtendedMapping { base: t.clone(), approx, fixed, tol })
}

impl ExtendedMapping {
    pub fn base(&self) -> &Mapping {
        &self.base
    }

    pub fn approx(&self) -> &AttractiveApprox {
        &self.approx
    }

    pub fn fixed(&self) -> &FixedSetApprox {
        &self.fixed
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `(x ∈ C) ∧ (x not fixed ∨ x ∈ approx)`. With no known fixed points
    /// this is just `x ∈ C`.
    pub fn in_d(&self, x: &Point) -> bool {
        if !self.base.domain().contains(x) {
            return false;
        }
        if self.fixed.is_empty() {
            return true;
        }
        self.base.apply(x).dist(x) > self.tol || self.approx.contains(x)
    }

    pub fn branch(&self, x: &Point) -> Branch {
        if self.in_d(x) {
            Branch::Base
        } else {
            Branch::Projection
        }
    }

    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        match self.branch(x) {
            Branch::Base => self.base.evaluate(x),
            Branch::Projection => Ok(self.approx.project(x)?.point),
        }
    }

    /// Points where the case split sits within the tolerance band: either
    /// `|Tx - x|` (for `x ∈ C`) or the approximation's boundary distance lies
    /// in `(tol, AMBIGUOUS_FACTOR·tol]`.
    pub fn is_boundary_ambiguous(&self, x: &Point) -> bool {
        let in_band = |v: f64, tol: f64| v > tol && v <= AMBIGUOUS_FACTOR * tol;
        let moved = self.base.domain().contains(x) && in_band(self.base.apply(x).dist(x), self.tol);
        moved || in_band(self.approx.violation(x), self.approx.tol())
    }
}

/// Checks `x ∈ approx ⇔ |T̃x - x| <= tol` on the grid.
///
/// A mismatch scores how far the failing side is from its threshold.
/// Boundary-ambiguous points are counted but never fail the check.
pub fn verify_extension_fixed_set(ext: &ExtendedMapping, grid: &[Point], tol: f64) -> Result<ResidualReport> {
    let scores: Vec<Result<(f64, bool)>> = par::map(grid, |g| {
        let moved = ext.evaluate(g)?.dist(g);
        let is_fixed = moved <= tol;
        let in_approx = ext.approx.contains(g);
        if is_fixed == in_approx {
            return Ok((0.0, false));
        }
        let gap = if in_approx { moved - tol } else { ext.approx.violation(g) - ext.approx.tol() };
        Ok((gap, ext.is_boundary_ambiguous(g)))
    });
    let mut report = ResidualReport {
        max_violation: 0.0,
        witness: Vec::new(),
        samples_checked: grid.len(),
        passed: true,
        tol: 0.0,
        ambiguous: 0,
        seed: None,
    };
    for (g, score) in grid.iter().zip(scores) {
        let (gap, ambiguous) = score?;
        if ambiguous {
            report.ambiguous += 1;
        } else if gap > report.max_violation {
            report.max_violation = gap;
            report.witness = vec![g.clone()];
            report.passed = false;
        }
    }
    Ok(report)
}

/// `max |T̃p - z| - |p - z|` over probes `p` and approximation members `z`.
pub fn verify_extension_quasinonexpansive(
    ext: &ExtendedMapping,
    members: &[Point],
    probes: &[Point],
    tol: f64,
) -> Result<ResidualReport> {
    if members.is_empty() {
        return Err(Error::EmptyInput("verify_extension_quasinonexpansive needs members"));
    }
    if probes.is_empty() {
        return Err(Error::EmptyInput("verify_extension_quasinonexpansive needs probes"));
    }
    if let Some(z) = members.iter().find(|z| !ext.approx.contains(z)) {
        return Err(Error::Precondition(format!("{z} is not in the attractive-set approximation")));
    }
    let images: Vec<Point> = par::map(probes, |p| ext.evaluate(p)).into_iter().collect::<Result<_>>()?;
    let m = members.len();
    let best = par::argmax(probes.len() * m, |k| {
        let (p, tp, z) = (&probes[k / m], &images[k / m], &members[k % m]);
        tp.dist(z) - p.dist(z)
    })
    .expect("non-empty");
    let witness = vec![probes[best.0 / m].clone(), members[best.0 % m].clone()];
    Ok(ResidualReport {
        max_violation: best.1,
        witness,
        samples_checked: probes.len() * m,
        passed: best.1 <= tol,
        tol,
        ambiguous: 0,
        seed: None,
    })
}
