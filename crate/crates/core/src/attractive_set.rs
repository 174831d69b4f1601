//! Outer approximation of the attractive set by sampled halfspaces.
//!
//! For each sample `x` the attractive condition `|Tx - z| <= |x - z|` is the
//! halfspace `2⟨x - Tx, z⟩ <= |x|² - |Tx|²`, bounded by the perpendicular
//! bisector of `[x, Tx]`. Intersecting finitely many of them gives a convex
//! superset of `A(T)` that shrinks as samples are added.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hilbert::{dykstra_project, ConvexSet, Halfspace, Point, ProjectionResult};
use crate::hilbert::{DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
use crate::mappings::{
    attractive_residual, is_fixed_point, quasinonexpansive_residual, Mapping, SampleSchedule,
    DEFAULT_RESIDUAL_TOL,
};
use crate::par;

/// Default membership tolerance for approximations.
pub const DEFAULT_APPROX_TOL: f64 = 1e-9;

/// Fixed points closer than this are merged.
const MERGE_RADIUS: f64 = 1e-6;

const REFINE_STEPS: usize = 100;

/// Halfspace of points `z` with `|Tx - z| <= |x - z|`.
///
/// The offset `|x|² - |Tx|²` is evaluated as `⟨x - Tx, x + Tx⟩`, which avoids
/// cancellation. When `|x - Tx| <= tol·max(|x|, |Tx|)` the sample counts as a
/// fixed point and the whole space is returned.
pub fn attractive_halfspace(t: &Mapping, x: &Point, tol: f64) -> Result<Halfspace> {
    let tx = t.evaluate(x)?;
    let moved = x - &tx;
    let scale = x.scaled_norm().max(tx.scaled_norm());
    if moved.scaled_norm() <= tol * scale {
        return Ok(Halfspace::whole(x.dim()));
    }
    let offset = moved.dot(&(x + &tx));
    Halfspace::new(moved.scale(2.0), offset)
}

/// Polyhedral outer approximation of `A(T)`.
#[derive(Clone, Debug)]
pub struct AttractiveApprox {
    sets: Vec<ConvexSet>,
    sample_points: Vec<Point>,
    generator: String,
    dim: usize,
    tol: f64,
    projection_tol: f64,
    reference: Option<ConvexSet>,
}

/// Builds the approximation from `samples`, dropping fixed-point samples.
///
/// If every sample is a fixed point the result is the whole space; check
/// [`AttractiveApprox::is_whole_space`]. An empty intersection is an error.
pub fn build_attractive_approx(t: &Mapping, samples: &[Point], tol: f64) -> Result<AttractiveApprox> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("build_attractive_approx needs samples"));
    }
    let halfspaces: Vec<Result<Halfspace>> = par::map(samples, |x| attractive_halfspace(t, x, tol));
    let mut sets = Vec::with_capacity(samples.len());
    for h in halfspaces {
        let h = h?;
        if !h.is_whole_space() {
            sets.push(ConvexSet::Halfspace(h));
        }
    }
    let approx = AttractiveApprox {
        sets,
        sample_points: samples.to_vec(),
        generator: t.label().to_string(),
        dim: t.dim(),
        tol,
        projection_tol: DEFAULT_TOL,
        reference: t.known_attractive().cloned(),
    };
    approx.probe_nonempty()?;
    Ok(approx)
}

impl AttractiveApprox {
    /// Builds from the mapping's own sample schedule.
    pub fn from_schedule(t: &Mapping, schedule: &SampleSchedule, tol: f64) -> Result<Self> {
        build_attractive_approx(t, &schedule.generate(t), tol)
    }

    fn probe_nonempty(&self) -> Result<()> {
        if self.sets.len() > 1 {
            dykstra_project(&self.sets, &Point::zeros(self.dim), 2_000, self.projection_tol)?;
        }
        Ok(())
    }

    /// Adds halfspaces for more samples. The result is a subset of `self`.
    pub fn refine(&self, t: &Mapping, extra: &[Point]) -> Result<Self> {
        let mut samples = self.sample_points.clone();
        samples.extend_from_slice(extra);
        let mut refined = build_attractive_approx(t, &samples, self.tol)?;
        refined.projection_tol = self.projection_tol;
        Ok(refined)
    }

    pub fn with_projection_tol(mut self, tol: f64) -> Self {
        self.projection_tol = tol;
        self
    }

    /// Replaces the analytic attractive set used for [`Self::resolution_at`].
    pub fn with_reference(mut self, reference: Option<ConvexSet>) -> Self {
        self.reference = reference;
        self
    }

    pub fn halfspaces(&self) -> impl Iterator<Item = &Halfspace> {
        self.sets.iter().filter_map(|s| match s {
            ConvexSet::Halfspace(h) => Some(h),
            _ => None,
        })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// True when no sample produced a constraint.
    pub fn is_whole_space(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sample_points(&self) -> &[Point] {
        &self.sample_points
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn reference(&self) -> Option<&ConvexSet> {
        self.reference.as_ref()
    }

    /// Largest signed distance past any boundary (negative inside).
    pub fn violation(&self, z: &Point) -> f64 {
        self.halfspaces().map(|h| h.signed_distance(z)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, z: &Point) -> bool {
        self.contains_within(z, self.tol)
    }

    pub fn contains_within(&self, z: &Point, tol: f64) -> bool {
        self.halfspaces().all(|h| h.contains(z, tol))
    }

    pub fn as_convex_set(&self) -> ConvexSet {
        if self.sets.is_empty() {
            ConvexSet::WholeSpace(self.dim)
        } else {
            ConvexSet::Intersection(self.sets.clone())
        }
    }

    pub fn project(&self, x: &Point) -> Result<ProjectionResult> {
        x.check_dim(self.dim)?;
        if self.sets.is_empty() {
            return Ok(ProjectionResult {
                point: x.clone(),
                converged: true,
                iterations: 0,
                residual: 0.0,
            });
        }
        dykstra_project(&self.sets, x, DEFAULT_MAX_SWEEPS, self.projection_tol)
    }

    /// Distance from `z` to the approximation.
    pub fn distance(&self, z: &Point) -> Result<f64> {
        Ok(z.dist(&self.project(z)?.point))
    }

    /// How far the approximation's projection of `q` is from the true one.
    ///
    /// Uses the analytic attractive set when known. Otherwise compares against
    /// the approximation built from the first half of the constraints, which
    /// is an a-posteriori estimate rather than a bound.
    pub fn resolution_at(&self, q: &Point) -> Result<f64> {
        let fine = self.project(q)?.point;
        match &self.reference {
            Some(reference) => Ok(fine.dist(&reference.project(q)?.point)),
            None => {
                let half = self.sets.len() / 2;
                if half == 0 {
                    return Ok(0.0);
                }
                let coarse = dykstra_project(&self.sets[..half], q, DEFAULT_MAX_SWEEPS, self.projection_tol)?;
                Ok(fine.dist(&coarse.point))
            }
        }
    }

    pub fn resolution_source(&self) -> &'static str {
        if self.reference.is_some() {
            "analytic attractive set"
        } else {
            "half-sample refinement estimate"
        }
    }

    /// Plain-text table: `#` header lines, then one halfspace per line as
    /// comma-separated normal coordinates followed by the offset.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# attractive-set approximation");
        let _ = writeln!(s, "# generator: {}", self.generator);
        let _ = writeln!(s, "# dim: {}", self.dim);
        let _ = writeln!(s, "# tol: {:e}", self.tol);
        let _ = writeln!(s, "# samples: {}", self.sample_points.len());
        let _ = writeln!(s, "# halfspaces: {}", self.sets.len());
        for h in self.halfspaces() {
            let mut fields: Vec<String> = h.normal().coords().iter().map(|c| format!("{c:.16e}")).collect();
            fields.push(format!("{:.16e}", h.offset()));
            let _ = writeln!(s, "{}", fields.join(","));
        }
        s
    }

    /// Parses [`Self::to_table`] output. Sample points are not stored in the
    /// table, so the result has none.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut generator = String::new();
        let mut dim = None;
        let mut tol = DEFAULT_APPROX_TOL;
        let mut sets = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.split_once(':') {
                    let value = value.trim();
                    match key.trim() {
                        "generator" => generator = value.to_string(),
                        "dim" => dim = Some(value.parse().map_err(|_| Error::Parse(format!("dim '{value}'")))?),
                        "tol" => tol = value.parse().map_err(|_| Error::Parse(format!("tol '{value}'")))?,
                        _ => {}
                    }
                }
                continue;
            }
            let nums: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::Parse(format!("number '{f}'"))))
                .collect::<Result<_>>()?;
            if nums.len() < 2 {
                return Err(Error::Parse(format!("halfspace line '{line}'")));
            }
            let (normal, offset) = nums.split_at(nums.len() - 1);
            let h = Halfspace::new(Point::from_slice(normal)?, offset[0])?;
            if let Some(d) = dim {
                h.normal().check_dim(d)?;
            }
            sets.push(ConvexSet::Halfspace(h));
        }
        let dim = dim.ok_or_else(|| Error::Parse("missing '# dim:' header".into()))?;
        Ok(Self {
            sets,
            sample_points: Vec::new(),
            generator,
            dim,
            tol,
            projection_tol: DEFAULT_TOL,
            reference: None,
        })
    }
}

/// Projects onto the approximation.
pub fn project_attractive(approx: &AttractiveApprox, x: &Point) -> Result<ProjectionResult> {
    approx.project(x)
}

/// Numerically fixed points found on a search grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedSetApprox {
    pub points: Vec<Point>,
    pub tol: f64,
}

impl FixedSetApprox {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, x: &Point) -> Option<&Point> {
        self.points.iter().min_by(|a, b| a.dist_sq(x).total_cmp(&b.dist_sq(x)))
    }
}

/// Keeps grid points with `|Tx - x| <= tol`, polishes each with the averaged
/// iteration `x <- (x + Tx)/2`, and merges near-duplicates.
pub fn find_fixed_points(t: &Mapping, grid: &[Point], tol: f64) -> FixedSetApprox {
    let refined: Vec<Option<Point>> = par::map(grid, |g| {
        if !t.domain().contains(g) || t.apply(g).dist(g) > tol {
            return None;
        }
        let mut x = g.clone();
        for _ in 0..REFINE_STEPS {
            let tx = t.apply(&x);
            let next = (&x + &tx).scale(0.5);
            if next == x || !t.domain().contains(&next) {
                break;
            }
            x = next;
        }
        (t.apply(&x).dist(&x) <= tol).then_some(x)
    });
    let mut points: Vec<Point> = Vec::new();
    for p in refined.into_iter().flatten() {
        if points.iter().all(|q| q.dist(&p) > MERGE_RADIUS) {
            points.push(p);
        }
    }
    FixedSetApprox { points, tol }
}

/// `|P_F x - P_A x|` with `P_F` the nearest found fixed point and `P_A` the
/// projection onto the approximation. For a quasinonexpansive self-map of a
/// closed convex set the two projections agree, so the gap measures the
/// approximation error.
pub fn check_projection_identity(
    t: &Mapping,
    approx: &AttractiveApprox,
    fixed: &FixedSetApprox,
    x: &Point,
) -> Result<f64> {
    if fixed.is_empty() {
        return Err(Error::EmptyInput("check_projection_identity needs fixed points"));
    }
    if t.domain().as_convex().is_none() {
        return Err(Error::Precondition(format!(
            "{}: the projection identity needs a closed convex domain",
            t.label()
        )));
    }
    if !approx.sample_points().is_empty() {
        let qne = quasinonexpansive_residual(t, &fixed.points, approx.sample_points(), DEFAULT_RESIDUAL_TOL)?;
        if !qne.passed {
            return Err(Error::Precondition(format!(
                "{} is not quasinonexpansive on its samples: {qne}",
                t.label()
            )));
        }
    }
    t.require_in_domain(x)?;
    let pf = fixed.nearest(x).expect("non-empty");
    let pa = approx.project(x)?.point;
    Ok(pf.dist(&pa))
}

/// Dense sample used to certify that `z` is attractive before the check.
const CERTIFY_SCHEDULE: SampleSchedule = SampleSchedule { grid: 256, random: 256, seed: 0x1e3a_0023 };

/// Projects an attractive point `z` onto `c` and reports whether the result
/// is a fixed point of `t` (within `tol`).
pub fn check_projected_attractive_is_fixed(t: &Mapping, c: &ConvexSet, z: &Point, tol: f64) -> Result<bool> {
    z.check_dim(t.dim())?;
    let samples: Vec<Point> =
        CERTIFY_SCHEDULE.generate(t).into_iter().filter(|x| c.contains(x, 0.0)).collect();
    let report = attractive_residual(t, z, &samples, DEFAULT_RESIDUAL_TOL)?;
    if !report.passed {
        return Err(Error::Precondition(format!("{z} is not attractive: {report}")));
    }
    let p = c.project(z)?.point;
    is_fixed_point(t, &p, tol)
}
