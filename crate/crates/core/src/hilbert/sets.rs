use std::fmt;

use super::dykstra::{dykstra_project, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
use super::point::Point;
use crate::error::{Error, Result};

/// Tolerance for the orthonormality check on affine spanning directions.
const ORTHONORMAL_TOL: f64 = 1e-9;

/// `{z : ⟨normal, z⟩ ≤ offset}`. A zero normal with a nonnegative offset is
/// the whole space.
///
/// Parameters are stored exactly as given. Projection and membership work
/// with a rescaled copy so that very small normals do not underflow.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    normal: Point,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::NonFinite(format!("halfspace offset {offset}")));
        }
        if normal.coords().iter().all(|&c| c == 0.0) && offset < 0.0 {
            return Err(Error::EmptySet(format!(
                "zero normal with negative offset {offset}"
            )));
        }
        Ok(Self { normal, offset })
    }

    /// The degenerate halfspace with zero normal and zero offset.
    pub fn whole(dim: usize) -> Self {
        Self { normal: Point::zeros(dim), offset: 0.0 }
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    pub fn is_whole_space(&self) -> bool {
        self.normal.coords().iter().all(|&c| c == 0.0)
    }

    /// Unit normal and matching offset, or `None` for the whole space.
    fn unit(&self) -> Option<(Point, f64)> {
        let s = self.normal.scaled_norm();
        if s == 0.0 {
            None
        } else {
            Some((Point::raw(self.normal.coords().iter().map(|c| c / s).collect()), self.offset / s))
        }
    }

    /// Signed distance of `x` past the boundary (positive outside).
    pub fn signed_distance(&self, x: &Point) -> f64 {
        match self.unit() {
            None => f64::NEG_INFINITY,
            Some((a, b)) => a.dot(x) - b,
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.signed_distance(x) <= tol
    }

    pub fn project(&self, x: &Point) -> Point {
        match self.unit() {
            None => x.clone(),
            Some((a, b)) => {
                let excess = a.dot(x) - b;
                if excess > 0.0 {
                    x.axpy(-excess, &a)
                } else {
                    x.clone()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!("ball radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn project(&self, x: &Point) -> Point {
        let n = x.dist(&self.center);
        if n <= self.radius {
            return x.clone();
        }
        let c = self.center.coords();
        Point::raw(
            x.coords()
                .iter()
                .zip(c)
                .map(|(xi, ci)| ci + (xi - ci) * self.radius / n)
                .collect(),
        )
    }
}

/// `anchor + span(directions)` with orthonormal directions.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSet {
    anchor: Point,
    directions: Vec<Point>,
}

impl AffineSet {
    pub fn new(anchor: Point, directions: Vec<Point>) -> Result<Self> {
        for (i, di) in directions.iter().enumerate() {
            di.check_dim(anchor.dim())?;
            for (j, dj) in directions.iter().enumerate().skip(i) {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (di.dot(dj) - expected).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidSet(
                        "affine directions must be orthonormal".into(),
                    ));
                }
            }
        }
        Ok(Self { anchor, directions })
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn directions(&self) -> &[Point] {
        &self.directions
    }

    pub fn project(&self, x: &Point) -> Point {
        let rel = x - &self.anchor;
        self.directions
            .iter()
            .fold(self.anchor.clone(), |acc, d| acc.axpy(rel.dot(d), d))
    }
}

/// Axis-aligned box; bounds may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidSet("box needs at least one axis".into()));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidSet(format!("box bounds [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        x.coords()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(xi, (lo, hi))| *xi >= lo - tol && *xi <= hi + tol)
    }

    pub fn project(&self, x: &Point) -> Point {
        Point::raw(
            x.coords()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(xi, (lo, hi))| xi.max(*lo).min(*hi))
                .collect(),
        )
    }

    /// Intersection of two boxes, `None` when empty.
    pub fn meet(&self, other: &BoxSet) -> Option<BoxSet> {
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        BoxSet::new(lower, upper).ok()
    }
}

/// A closed convex subset of R^d.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Halfspace(Halfspace),
    Ball(Ball),
    Affine(AffineSet),
    Box(BoxSet),
    /// Use [`ConvexSet::intersection`] to get the feasibility probe.
    Intersection(Vec<ConvexSet>),
    Singleton(Point),
    WholeSpace(usize),
}

/// Outcome of a metric projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub point: Point,
    pub converged: bool,
    pub iterations: usize,
    /// Change measured in the last sweep; zero for closed-form projections.
    pub residual: f64,
}

impl ProjectionResult {
    pub(crate) fn exact(point: Point) -> Self {
        Self { point, converged: true, iterations: 0, residual: 0.0 }
    }
}

impl ConvexSet {
    /// Intersection of `sets`, rejected if the feasibility probe (Dykstra
    /// started from the origin) does not end inside every member.
    pub fn intersection(sets: Vec<ConvexSet>) -> Result<ConvexSet> {
        let Some(first) = sets.first() else {
            return Err(Error::EmptyInput("intersection of no sets"));
        };
        let dim = first.dim();
        for s in &sets {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
        }
        probe_feasible(&sets)?;
        Ok(ConvexSet::Intersection(sets))
    }

    pub fn halfspace(normal: Point, offset: f64) -> Result<ConvexSet> {
        Halfspace::new(normal, offset).map(ConvexSet::Halfspace)
    }

    pub fn ball(center: Point, radius: f64) -> Result<ConvexSet> {
        Ball::new(center, radius).map(ConvexSet::Ball)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Halfspace(h) => h.dim(),
            ConvexSet::Ball(b) => b.center.dim(),
            ConvexSet::Affine(a) => a.anchor.dim(),
            ConvexSet::Box(b) => b.dim(),
            ConvexSet::Intersection(sets) => sets.first().map_or(0, ConvexSet::dim),
            ConvexSet::Singleton(p) => p.dim(),
            ConvexSet::WholeSpace(d) => *d,
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        match self {
            ConvexSet::Halfspace(h) => h.contains(x, tol),
            ConvexSet::Ball(b) => x.dist(&b.center) <= b.radius + tol,
            ConvexSet::Affine(a) => x.dist(&a.project(x)) <= tol,
            ConvexSet::Box(b) => b.contains(x, tol),
            ConvexSet::Intersection(sets) => sets.iter().all(|s| s.contains(x, tol)),
            ConvexSet::Singleton(p) => x.dist(p) <= tol,
            ConvexSet::WholeSpace(_) => true,
        }
    }

    /// Distance to the set for simple variants; for an intersection, the
    /// largest distance to any member (a lower bound on the true distance).
    pub fn violation(&self, x: &Point) -> f64 {
        match self {
            ConvexSet::Intersection(sets) => {
                sets.iter().map(|s| s.violation(x)).fold(0.0, f64::max)
            }
            ConvexSet::Halfspace(h) => h.signed_distance(x).max(0.0),
            other => x.dist(&other.project_simple(x).expect("simple variant")),
        }
    }

    fn project_simple(&self, x: &Point) -> Option<Point> {
        Some(match self {
            ConvexSet::Halfspace(h) => h.project(x),
            ConvexSet::Ball(b) => b.project(x),
            ConvexSet::Affine(a) => a.project(x),
            ConvexSet::Box(b) => b.project(x),
            ConvexSet::Singleton(p) => p.clone(),
            ConvexSet::WholeSpace(_) => x.clone(),
            ConvexSet::Intersection(_) => return None,
        })
    }

    /// Metric projection of `x`. Closed form for every variant except
    /// [`ConvexSet::Intersection`], which runs Dykstra with default settings.
    pub fn project(&self, x: &Point) -> Result<ProjectionResult> {
        x.check_dim(self.dim())?;
        match self {
            ConvexSet::Intersection(sets) => {
                dykstra_project(sets, x, DEFAULT_MAX_SWEEPS, DEFAULT_TOL)
            }
            simple => Ok(ProjectionResult::exact(
                simple.project_simple(x).expect("simple variant"),
            )),
        }
    }

    /// A bounded box containing the set, when one is readily available.
    pub fn bounding_box(&self) -> Option<BoxSet> {
        match self {
            ConvexSet::Ball(b) => {
                let lo = b.center.coords().iter().map(|c| c - b.radius).collect();
                let hi = b.center.coords().iter().map(|c| c + b.radius).collect();
                BoxSet::new(lo, hi).ok()
            }
            ConvexSet::Box(b) if b.is_bounded() => Some(b.clone()),
            ConvexSet::Singleton(p) => BoxSet::new(p.coords().to_vec(), p.coords().to_vec()).ok(),
            ConvexSet::Intersection(sets) => {
                let mut boxes = sets.iter().filter_map(ConvexSet::bounding_box);
                let first = boxes.next()?;
                boxes.try_fold(first, |acc, b| acc.meet(&b))
            }
            _ => None,
        }
    }
}

/// Tolerance on the final probe iterate's distance to each member.
pub(crate) const FEASIBILITY_TOL: f64 = 1e-6;
const PROBE_SWEEPS: usize = 2_000;

fn probe_feasible(sets: &[ConvexSet]) -> Result<()> {
    let origin = Point::zeros(sets[0].dim());
    dykstra_project(sets, &origin, PROBE_SWEEPS, DEFAULT_TOL).map(|_| ())
}

impl fmt::Display for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexSet::Halfspace(h) => write!(f, "{{z : <{}, z> <= {}}}", h.normal, h.offset),
            ConvexSet::Ball(b) => write!(f, "ball(center {}, radius {})", b.center, b.radius),
            ConvexSet::Affine(a) => {
                write!(f, "affine(anchor {}, {} directions)", a.anchor, a.directions.len())
            }
            ConvexSet::Box(b) => {
                write!(f, "box")?;
                for (lo, hi) in b.lower.iter().zip(&b.upper) {
                    write!(f, " [{lo}, {hi}]")?;
                }
                Ok(())
            }
            ConvexSet::Intersection(sets) => write!(f, "intersection of {} sets", sets.len()),
            ConvexSet::Singleton(p) => write!(f, "{{{p}}}"),
            ConvexSet::WholeSpace(d) => write!(f, "R^{d}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(normal: &[f64], offset: f64) -> ConvexSet {
        ConvexSet::halfspace(Point::from_slice(normal).unwrap(), offset).unwrap()
    }

    #[test]
    fn halfspace_projection_examples() {
        let h = hs(&[1.0, 0.0], 0.0);
        assert_eq!(h.project(&Point::from([2.0, 3.0])).unwrap().point, Point::from([0.0, 3.0]));
        assert_eq!(h.project(&Point::from([-1.0, 5.0])).unwrap().point, Point::from([-1.0, 5.0]));
    }

    #[test]
    fn ball_projection_is_radial() {
        let b = ConvexSet::ball(Point::zeros(2), 1.0).unwrap();
        let p = b.project(&Point::from([3.0, 4.0])).unwrap();
        assert!(p.converged);
        assert_eq!(p.point, Point::from([0.6, 0.8]));
    }

    #[test]
    fn zero_normal_halfspaces() {
        assert!(Halfspace::new(Point::zeros(2), -1.0).is_err());
        let whole = Halfspace::new(Point::zeros(2), 0.0).unwrap();
        assert!(whole.is_whole_space());
        let x = Point::from([7.0, -3.0]);
        assert_eq!(whole.project(&x), x);
        assert!(whole.contains(&x, 0.0));
    }

    #[test]
    fn tiny_normal_projects_exactly() {
        // normal underflows when squared
        let h = Halfspace::new(Point::from(2f64.powi(-700)), 0.0).unwrap();
        assert_eq!(h.project(&Point::from(1.0)), Point::from(0.0));
        // subnormal normal: the reciprocal of its norm overflows
        let h = Halfspace::new(Point::from(f64::from_bits(2)), 0.0).unwrap();
        assert!(h.contains(&Point::from(0.0), 0.0));
        assert_eq!(h.signed_distance(&Point::from(-1.0)), -1.0);
        assert_eq!(h.project(&Point::from(1.0)), Point::from(0.0));
    }

    #[test]
    fn affine_projection() {
        let line = AffineSet::new(Point::from([0.0, 1.0]), vec![Point::from([1.0, 0.0])]).unwrap();
        assert_eq!(line.project(&Point::from([3.0, -2.0])), Point::from([3.0, 1.0]));
        let bad = AffineSet::new(Point::zeros(2), vec![Point::from([1.0, 1.0])]);
        assert!(bad.is_err());
    }

    #[test]
    fn box_projection_with_infinite_bounds() {
        let b = ConvexSet::Box(BoxSet::new(vec![0.0, f64::NEG_INFINITY], vec![1.0, 0.0]).unwrap());
        assert_eq!(b.project(&Point::from([2.0, 5.0])).unwrap().point, Point::from([1.0, 0.0]));
        assert!(b.bounding_box().is_none());
    }

    #[test]
    fn singleton_and_whole_space() {
        let s = ConvexSet::Singleton(Point::from([1.0, 2.0]));
        assert_eq!(s.project(&Point::zeros(2)).unwrap().point, Point::from([1.0, 2.0]));
        let w = ConvexSet::WholeSpace(2);
        let x = Point::from([4.0, 4.0]);
        assert_eq!(w.project(&x).unwrap().point, x);
    }

    #[test]
    fn projection_rejects_wrong_dimension() {
        let b = ConvexSet::ball(Point::zeros(2), 1.0).unwrap();
        assert!(matches!(
            b.project(&Point::from(1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn infeasible_intersection_rejected() {
        let left = hs(&[1.0], -1.0); // z <= -1
        let right = hs(&[-1.0], -1.0); // z >= 1
        assert!(matches!(
            ConvexSet::intersection(vec![left, right]),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn bounding_box_of_intersection() {
        let set = ConvexSet::intersection(vec![
            ConvexSet::ball(Point::zeros(2), 1.0).unwrap(),
            ConvexSet::Box(BoxSet::cube(2, 0.0, 5.0).unwrap()),
        ])
        .unwrap();
        let b = set.bounding_box().unwrap();
        assert_eq!(b.lower(), &[0.0, 0.0]);
        assert_eq!(b.upper(), &[1.0, 1.0]);
    }
}
