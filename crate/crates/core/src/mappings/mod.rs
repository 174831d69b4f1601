//! Mappings `T: C -> R^d`, the built-in catalog, and sample-based checkers
//! for the defining inequalities of each mapping class.

mod catalog;
mod residual;
mod sampling;

use std::fmt;
use std::sync::Arc;

pub use catalog::{CatalogEntry, CatalogInfo, CATALOG_IDS};
pub use residual::{
    attractive_residual, is_fixed_point, lambda_hybrid_equiv_residual, lambda_hybrid_residual,
    quasinonexpansive_residual, ResidualReport, DEFAULT_RESIDUAL_TOL,
};
pub use sampling::{
    grid_with_step, random_in_box, random_pairs, random_points, uniform_grid, SampleSchedule,
    OPEN_MARGIN,
};

use crate::error::{Error, Result};
use crate::hilbert::{BoxSet, ConvexSet, Point};

/// Explicit sample list with a membership predicate.
#[derive(Clone)]
pub struct SampledDomain {
    pub points: Vec<Point>,
    member: Arc<dyn Fn(&Point) -> bool + Send + Sync>,
}

impl SampledDomain {
    pub fn new(points: Vec<Point>, member: impl Fn(&Point) -> bool + Send + Sync + 'static) -> Self {
        Self { points, member: Arc::new(member) }
    }
}

/// The set `C` on which a mapping is defined.
#[derive(Clone)]
pub enum Domain {
    Closed(ConvexSet),
    /// Interior of a box; bounds may be infinite.
    OpenBox(BoxSet),
    Sampled(SampledDomain),
}

impl Domain {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Domain::Closed(s) => Some(s.dim()),
            Domain::OpenBox(b) => Some(b.dim()),
            Domain::Sampled(s) => s.points.first().map(Point::dim),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Domain::Closed(s) => s.dim() == x.dim() && s.contains(x, 0.0),
            Domain::OpenBox(b) => {
                b.dim() == x.dim()
                    && x.coords()
                        .iter()
                        .zip(b.lower().iter().zip(b.upper()))
                        .all(|(xi, (lo, hi))| xi > lo && xi < hi)
            }
            Domain::Sampled(s) => (s.member)(x),
        }
    }

    /// Membership in the closure, up to `tol`.
    pub fn contains_closure(&self, x: &Point, tol: f64) -> bool {
        match self {
            Domain::Closed(s) => s.dim() == x.dim() && s.contains(x, tol),
            Domain::OpenBox(b) => b.dim() == x.dim() && b.contains(x, tol),
            Domain::Sampled(s) => (s.member)(x),
        }
    }

    pub fn as_convex(&self) -> Option<&ConvexSet> {
        match self {
            Domain::Closed(s) => Some(s),
            _ => None,
        }
    }

    /// Closed box used by the samplers: `probe` cut down to the domain, with
    /// open bounds pulled inward by [`OPEN_MARGIN`].
    pub fn sampling_box(&self, probe: &BoxSet) -> BoxSet {
        let cut = match self {
            Domain::Closed(ConvexSet::Box(b)) => b.meet(probe),
            Domain::Closed(s) => s.bounding_box().and_then(|b| b.meet(probe)),
            Domain::OpenBox(b) => {
                let lower = b.lower().iter().map(|lo| lo + OPEN_MARGIN).collect();
                let upper = b.upper().iter().map(|hi| hi - OPEN_MARGIN).collect();
                BoxSet::new(lower, upper).ok().and_then(|inner| inner.meet(probe))
            }
            Domain::Sampled(_) => None,
        };
        cut.unwrap_or_else(|| probe.clone())
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Closed(s) => write!(f, "Closed({s})"),
            Domain::OpenBox(b) => write!(f, "OpenBox({:?}, {:?})", b.lower(), b.upper()),
            Domain::Sampled(s) => write!(f, "Sampled({} points)", s.points.len()),
        }
    }
}

type MapFn = dyn Fn(&Point) -> Point + Send + Sync;

/// A deterministic mapping with a domain, a bounded probe region used for
/// sampling, and whatever analytic facts are known about it.
#[derive(Clone)]
pub struct Mapping {
    label: String,
    params: Vec<f64>,
    domain: Domain,
    probe: BoxSet,
    lambda: Option<f64>,
    known_attractive: Option<ConvexSet>,
    func: Arc<MapFn>,
}

impl Mapping {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        probe: BoxSet,
        func: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            params: Vec::new(),
            domain,
            probe,
            lambda: None,
            known_attractive: None,
            func: Arc::new(func),
        }
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Self {
        self.params = params;
        self
    }

    /// Declares the λ for which the mapping is expected to be λ-hybrid.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    /// Records the analytic attractive set, used to measure approximation error.
    pub fn with_known_attractive(mut self, set: ConvexSet) -> Self {
        self.known_attractive = Some(set);
        self
    }

    /// Same map on a smaller closed convex domain. The analytic attractive
    /// set generally changes under restriction, so it must be restated.
    pub fn restrict(&self, domain: ConvexSet, known_attractive: Option<ConvexSet>) -> Mapping {
        let probe = domain
            .bounding_box()
            .and_then(|b| b.meet(&self.probe))
            .unwrap_or_else(|| self.probe.clone());
        Mapping {
            label: format!("{}|restricted", self.label),
            domain: Domain::Closed(domain),
            probe,
            known_attractive,
            ..self.clone()
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn probe(&self) -> &BoxSet {
        &self.probe
    }

    pub fn declared_lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn known_attractive(&self) -> Option<&ConvexSet> {
        self.known_attractive.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.probe.dim()
    }

    /// Evaluates without any domain check.
    #[inline]
    pub fn apply(&self, x: &Point) -> Point {
        (self.func)(x)
    }

    /// Evaluates at a point of the domain, rejecting non-finite output.
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        self.require_in_domain(x)?;
        let y = self.apply(x);
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("{}({x}) = {y:?}", self.label)));
        }
        Ok(y)
    }

    pub(crate) fn require_in_domain(&self, x: &Point) -> Result<()> {
        x.check_dim(self.dim())?;
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.clone() })
        }
    }
}

impl fmt::Debug for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mapping")
            .field("label", &self.label)
            .field("params", &self.params)
            .field("domain", &self.domain)
            .field("lambda", &self.lambda)
            .finish_non_exhaustive()
    }
}
