//! Cesàro-mean iteration: orbits, running means, projection trajectories,
//! Fejér diagnostics and convergence reports.

use std::collections::HashMap;
use std::fmt;
use std::io;

use crate::attractive_set::AttractiveApprox;
use crate::error::{Error, Result};
use crate::hilbert::Point;
use crate::mappings::{attractive_residual, lambda_hybrid_residual, random_pairs, Mapping, ResidualReport};
use crate::par;

/// Shortest trace accepted by [`analyze`].
pub const MIN_TRACE: usize = 50;

/// Seed for the λ-hybrid precondition of [`cluster_attractiveness`].
pub const HYBRID_SEED: u64 = 4_100;
const HYBRID_PAIRS: usize = 200;

/// Slack for orbit points that reach the boundary of an open domain.
const CLOSURE_TOL: f64 = 1e-12;

/// An orbit `x, Tx, ..., T^N x` with its Cesàro means and projections.
#[derive(Clone, Debug)]
pub struct CesaroTrace {
    pub start: Point,
    /// `orbit[n] = T^n x` for `n = 0..=N`.
    pub orbit: Vec<Point>,
    /// `means[n] = (1/n) Σ_{k<n} T^k x` for `n >= 1`; `means[0]` is `x`.
    pub means: Vec<Point>,
    /// Projection of `orbit[n]` onto the approximation.
    pub proj_trajectory: Vec<Point>,
    /// `|T^{n+1}x - u| - |T^n x - u|` for `n = 0..N`.
    pub fejer_residuals: Vec<f64>,
    /// The approximation member `u` used for the Fejér residuals.
    pub fejer_witness: Point,
    pub n_max: usize,
    pub notes: Vec<String>,
}

impl CesaroTrace {
    /// Largest distance between two orbit points.
    pub fn orbit_diameter(&self) -> f64 {
        let orbit = &self.orbit;
        par::argmax(orbit.len(), |i| {
            orbit[i + 1..].iter().map(|p| p.dist(&orbit[i])).fold(0.0, f64::max)
        })
        .map_or(0.0, |(_, d)| d)
    }

    pub fn last_mean(&self) -> &Point {
        self.means.last().expect("trace has at least one mean")
    }
}

/// Runs `n_max` steps from `x`.
///
/// The means use `z_{n+1} = z_n + (T^n x - z_n)/(n+1)`, which keeps constant
/// orbits exactly constant. An orbit point on the boundary of an open domain
/// is noted and iteration continues; one farther out is an error.
pub fn iterate(t: &Mapping, x: &Point, n_max: usize, approx: &AttractiveApprox) -> Result<CesaroTrace> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    t.require_in_domain(x)?;
    x.check_dim(approx.dim())?;
    let mut notes = Vec::new();
    let mut orbit = Vec::with_capacity(n_max + 1);
    orbit.push(x.clone());
    let mut boundary_noted = false;
    for n in 0..n_max {
        let next = t.apply(&orbit[n]);
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("{}: orbit step {}", t.label(), n + 1)));
        }
        if !t.domain().contains(&next) {
            if !t.domain().contains_closure(&next, CLOSURE_TOL) {
                return Err(Error::OrbitLeftDomain { step: n + 1, point: next });
            }
            if !boundary_noted {
                notes.push(format!("orbit reached the domain boundary at step {}: {next}", n + 1));
                boundary_noted = true;
            }
        }
        orbit.push(next);
    }

    let mut means = Vec::with_capacity(n_max + 1);
    means.push(x.clone());
    let mut z = x.clone();
    means.push(z.clone());
    for (n, p) in orbit.iter().enumerate().take(n_max).skip(1) {
        z = z.axpy(1.0 / (n + 1) as f64, &(p - &z));
        means.push(z.clone());
    }

    let proj_trajectory = project_all(approx, &orbit)?;
    let fejer_witness = approx.project(&Point::zeros(x.dim()))?.point;
    let fejer_residuals = orbit
        .windows(2)
        .map(|w| w[1].dist(&fejer_witness) - w[0].dist(&fejer_witness))
        .collect();

    Ok(CesaroTrace {
        start: x.clone(),
        orbit,
        means,
        proj_trajectory,
        fejer_residuals,
        fejer_witness,
        n_max,
        notes,
    })
}

/// Projects every point, computing each distinct point once.
fn project_all(approx: &AttractiveApprox, points: &[Point]) -> Result<Vec<Point>> {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique: Vec<&Point> = Vec::new();
    let slots: Vec<usize> = points
        .iter()
        .map(|p| {
            *index.entry(p.bits()).or_insert_with(|| {
                unique.push(p);
                unique.len() - 1
            })
        })
        .collect();
    let projected: Vec<Point> = par::map(&unique, |p| approx.project(p).map(|r| r.point))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(slots.into_iter().map(|i| projected[i].clone()).collect())
}

/// Independent traces from several starts, run in parallel.
pub fn iterate_many(
    t: &Mapping,
    starts: &[Point],
    n_max: usize,
    approx: &AttractiveApprox,
) -> Vec<Result<CesaroTrace>> {
    par::map(starts, |x| iterate(t, x, n_max, approx))
}

/// Outcome of testing that the means cluster inside the attractive set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterHypothesis {
    /// The tail mean is Cauchy and lies in the approximation.
    VerifiedOnTrace,
    /// The tail mean is Cauchy but lies outside the approximation.
    Failed,
    /// The means did not settle within the tolerance.
    Undetermined,
}

impl fmt::Display for ClusterHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterHypothesis::VerifiedOnTrace => "verified on trace",
            ClusterHypothesis::Failed => "failed",
            ClusterHypothesis::Undetermined => "undetermined",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// Average of the projection trajectory over the tail window.
    pub proj_limit: Point,
    /// `max |p_n - p_N|` over the tail window.
    pub proj_cauchy_residual: f64,
    /// `z_N` when the means are Cauchy over the tail window.
    pub mean_limit: Option<Point>,
    /// `max |z_n - z_N|` over the tail window.
    pub mean_cauchy_residual: f64,
    pub mean_matches_proj: bool,
    /// The means settle outside the approximation.
    pub contradiction_case: bool,
    /// Distance from the mean limit to the approximation.
    pub membership_violation: Option<f64>,
    pub hypothesis: ClusterHypothesis,
    pub window: usize,
    pub orbit_diameter: f64,
    pub resolution: f64,
    pub tol: f64,
    /// `tol + 2·diameter/N + resolution`.
    pub combined_tol: f64,
    /// `|z_n - mean_limit|` for `n = 1..=N`, empty without a limit.
    pub mean_gaps: Vec<f64>,
    pub diagnostics: Vec<String>,
}

impl ConvergenceReport {
    pub fn mean_proj_gap(&self) -> Option<f64> {
        self.mean_limit.as_ref().map(|m| m.dist(&self.proj_limit))
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "proj_limit = {}", self.proj_limit)?;
        writeln!(f, "proj_cauchy_residual = {:e}", self.proj_cauchy_residual)?;
        match &self.mean_limit {
            Some(m) => writeln!(f, "mean_limit = {m}")?,
            None => writeln!(f, "mean_limit = NONE")?,
        }
        writeln!(f, "mean_cauchy_residual = {:e}", self.mean_cauchy_residual)?;
        if let Some(gap) = self.mean_proj_gap() {
            writeln!(f, "|mean_limit - proj_limit| = {gap:e}")?;
        }
        writeln!(f, "mean_matches_proj = {}", self.mean_matches_proj)?;
        writeln!(f, "contradiction_case = {}", self.contradiction_case)?;
        if let Some(v) = self.membership_violation {
            writeln!(f, "membership_violation = {v:e}")?;
        }
        writeln!(f, "cluster hypothesis: {}", self.hypothesis)?;
        writeln!(
            f,
            "combined_tol = {:e} (tol {:e} + 2*diameter {:e}/N + resolution {:e}), tail window {}",
            self.combined_tol,
            self.tol,
            self.orbit_diameter,
            self.resolution,
            self.window
        )?;
        for d in &self.diagnostics {
            writeln!(f, "note: {d}")?;
        }
        Ok(())
    }
}

/// Tail window: the last 10% of the steps, at least [`MIN_TRACE`].
pub fn tail_window(n_max: usize) -> usize {
    n_max.div_ceil(10).max(MIN_TRACE).min(n_max)
}

/// Estimates the limits of the projection trajectory and of the means.
pub fn analyze(trace: &CesaroTrace, approx: &AttractiveApprox, tol: f64) -> Result<ConvergenceReport> {
    let n = trace.n_max;
    if n < MIN_TRACE {
        return Err(Error::TraceTooShort { len: n, min: MIN_TRACE });
    }
    let window = tail_window(n);
    let tail = n + 1 - window..=n;

    let proj = &trace.proj_trajectory;
    let mut proj_limit = Point::zeros(trace.start.dim());
    for p in &proj[tail.clone()] {
        proj_limit = &proj_limit + p;
    }
    let proj_limit = proj_limit.scale(1.0 / window as f64);
    let proj_cauchy_residual = proj[tail.clone()].iter().map(|p| p.dist(&proj[n])).fold(0.0, f64::max);

    let z_last = trace.last_mean();
    let mean_cauchy_residual = trace.means[tail].iter().map(|z| z.dist(z_last)).fold(0.0, f64::max);

    let orbit_diameter = trace.orbit_diameter();
    let mut resolution: f64 = 0.0;
    for q in [&trace.start, &proj_limit, z_last] {
        resolution = resolution.max(approx.resolution_at(q)?);
    }
    let combined_tol = tol + 2.0 * orbit_diameter / n as f64 + resolution;

    let mut diagnostics = trace.notes.clone();
    diagnostics.push(format!("resolution source: {}", approx.resolution_source()));
    diagnostics.push(format!("Fejér witness u = {}", trace.fejer_witness));
    let worst_fejer = trace.fejer_residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    diagnostics.push(format!("max Fejér residual = {worst_fejer:e}"));

    let mean_limit = (mean_cauchy_residual <= combined_tol).then(|| z_last.clone());
    let (membership_violation, contradiction_case, hypothesis, mean_gaps) = match &mean_limit {
        None => {
            diagnostics.push("means not Cauchy over the tail window; no cluster point reported".into());
            (None, false, ClusterHypothesis::Undetermined, Vec::new())
        }
        Some(m) => {
            let violation = approx.distance(m)?;
            let contradiction = violation > combined_tol;
            let hypothesis =
                if contradiction { ClusterHypothesis::Failed } else { ClusterHypothesis::VerifiedOnTrace };
            let gaps = trace.means[1..].iter().map(|z| z.dist(m)).collect();
            (Some(violation), contradiction, hypothesis, gaps)
        }
    };
    if contradiction_case {
        diagnostics.push("means settle outside the attractive set: the start is fixed but not attractive".into());
    }
    let mean_matches_proj = hypothesis == ClusterHypothesis::VerifiedOnTrace
        && mean_limit.as_ref().is_some_and(|m| m.dist(&proj_limit) <= combined_tol);

    Ok(ConvergenceReport {
        proj_limit,
        proj_cauchy_residual,
        mean_limit,
        mean_cauchy_residual,
        mean_matches_proj,
        contradiction_case,
        membership_violation,
        hypothesis,
        window,
        orbit_diameter,
        resolution,
        tol,
        combined_tol,
        mean_gaps,
        diagnostics,
    })
}

/// Checks that the tail mean of a λ-hybrid orbit is an attractive point.
///
/// Requires the declared λ to pass on seeded pairs and the orbit to be
/// Fejér monotone with respect to the trace's witness. Passes when the
/// attractive residual of `z_N` is at most `tol + 4·diameter/N`.
pub fn cluster_attractiveness(
    trace: &CesaroTrace,
    t: &Mapping,
    samples: &[Point],
    tol: f64,
) -> Result<ResidualReport> {
    let lambda = t
        .declared_lambda()
        .ok_or_else(|| Error::Precondition(format!("{} declares no λ", t.label())))?;
    let pairs = random_pairs(t, HYBRID_PAIRS, HYBRID_SEED);
    let hybrid = lambda_hybrid_residual(t, lambda, &pairs, tol)?;
    if !hybrid.passed {
        return Err(Error::Precondition(format!("{} is not {lambda}-hybrid: {hybrid}", t.label())));
    }
    if let Some((n, r)) = trace.fejer_residuals.iter().enumerate().find(|(_, r)| !(**r <= tol)) {
        return Err(Error::Precondition(format!(
            "orbit not bounded by Fejér monotonicity: residual {r:e} at step {n} against {}",
            trace.fejer_witness
        )));
    }
    let slack = 2.0 * (2.0 * trace.orbit_diameter() / trace.n_max as f64);
    let report = attractive_residual(t, trace.last_mean(), samples, tol + slack)?;
    Ok(report.with_seed(HYBRID_SEED))
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the trace as CSV with columns `n`, orbit, mean and projection
/// coordinates, `fejer_residual` and `mean_gap`. Undefined cells are empty.
pub fn write_trace_csv<W: io::Write>(
    trace: &CesaroTrace,
    report: Option<&ConvergenceReport>,
    out: W,
) -> Result<()> {
    let dim = trace.start.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string()];
    for prefix in ["orbit", "mean", "proj"] {
        header.extend((1..=dim).map(|i| format!("{prefix}_{i}")));
    }
    header.push("fejer_residual".into());
    header.push("mean_gap".into());
    w.write_record(&header).map_err(io::Error::from)?;

    let gaps = report.map_or(&[][..], |r| &r.mean_gaps[..]);
    for n in 0..=trace.n_max {
        let mut row = vec![n.to_string()];
        row.extend(trace.orbit[n].coords().iter().copied().map(fmt_num));
        if n == 0 {
            row.extend(std::iter::repeat_n(String::new(), dim));
        } else {
            row.extend(trace.means[n].coords().iter().copied().map(fmt_num));
        }
        row.extend(trace.proj_trajectory[n].coords().iter().copied().map(fmt_num));
        row.push(trace.fejer_residuals.get(n).copied().map(fmt_num).unwrap_or_default());
        row.push(n.checked_sub(1).and_then(|i| gaps.get(i)).copied().map(fmt_num).unwrap_or_default());
        w.write_record(&row).map_err(io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mappings::{CatalogEntry, SampleSchedule};

    const TOL: f64 = 1e-9;

    fn approx_for(t: &Mapping) -> AttractiveApprox {
        AttractiveApprox::from_schedule(t, &SampleSchedule::default(), TOL).unwrap()
    }

    fn direct_mean(orbit: &[Point], n: usize) -> Point {
        let mut s = Point::zeros(orbit[0].dim());
        for p in &orbit[..n] {
            s = &s + p;
        }
        s.scale(1.0 / n as f64)
    }

    #[test]
    fn halving_means_follow_the_geometric_sum() {
        let t = CatalogEntry::Halving.mapping();
        let trace = iterate(&t, &Point::from(1.0), 4, &approx_for(&t)).unwrap();
        assert_eq!(trace.orbit.len(), 5);
        assert_eq!(trace.means[4], Point::from(0.46875));
        for n in 1..=4 {
            let closed = (2.0 - 2f64.powi(1 - n as i32)) / n as f64;
            assert!((trace.means[n][0] - closed).abs() < 1e-15);
        }
    }

    #[test]
    fn orbit_steps_are_exact() {
        let t = CatalogEntry::Rotation { theta: 0.7, center: [0.3, -0.2] }.mapping();
        let trace = iterate(&t, &Point::from([1.0, 2.0]), 100, &approx_for(&t)).unwrap();
        for w in trace.orbit.windows(2) {
            assert_eq!(w[1], t.apply(&w[0]));
        }
    }

    #[test]
    fn quarter_turn_orbit_averages_to_zero() {
        let t = CatalogEntry::Rotation { theta: PI / 2.0, center: [0.0, 0.0] }.mapping();
        let trace = iterate(&t, &Point::from([1.0, 0.0]), 4, &approx_for(&t)).unwrap();
        assert_eq!(trace.orbit[1], Point::from([0.0, 1.0]));
        assert!(trace.means[4].norm() <= 1e-16, "{}", trace.means[4]);
    }

    #[test]
    fn fixed_start_gives_constant_means() {
        let t = CatalogEntry::Square.mapping();
        let trace = iterate(&t, &Point::from(1.0), 200, &approx_for(&t)).unwrap();
        assert!(trace.means[1..].iter().all(|z| *z == Point::from(1.0)));
    }

    #[test]
    fn recurrence_matches_direct_sum() {
        let t = CatalogEntry::Rotation { theta: 1.0, center: [0.5, 0.0] }.mapping();
        let trace = iterate(&t, &Point::from([2.0, 1.0]), 1000, &approx_for(&t)).unwrap();
        assert!(trace.means[1000].dist(&direct_mean(&trace.orbit, 1000)) <= 1e-12);
        let t = CatalogEntry::Halving.mapping();
        let trace = iterate(&t, &Point::from(3.0), 1000, &approx_for(&t)).unwrap();
        assert!(trace.means[1000].dist(&direct_mean(&trace.orbit, 1000)) <= 1e-12);
    }

    #[test]
    fn halving_orbit_reaches_the_boundary_with_a_note() {
        let t = CatalogEntry::Halving.mapping();
        let trace = iterate(&t, &Point::from(1.0), 2000, &approx_for(&t)).unwrap();
        assert_eq!(trace.orbit[2000], Point::from(0.0));
        assert!(trace.notes.iter().any(|n| n.contains("boundary")));
    }

    #[test]
    fn leaving_the_domain_is_an_error() {
        let t = CatalogEntry::Square.mapping();
        let escape = Mapping::new("escape", t.domain().clone(), t.probe().clone(), |x| x.scale(3.0));
        let approx = build(&t);
        match iterate(&escape, &Point::from(0.5), 10, &approx) {
            Err(Error::OrbitLeftDomain { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
        assert!(iterate(&t, &Point::from(0.5), 0, &approx).is_err());
        assert!(iterate(&t, &Point::from(2.0), 10, &approx).is_err());
    }

    fn build(t: &Mapping) -> AttractiveApprox {
        approx_for(t)
    }

    #[test]
    fn halving_analysis() {
        let t = CatalogEntry::Halving.mapping();
        let approx = approx_for(&t);
        let trace = iterate(&t, &Point::from(1.0), 2000, &approx).unwrap();
        let r = analyze(&trace, &approx, TOL).unwrap();
        assert!(r.proj_limit.norm() <= 1e-6);
        // the closed form sits below 2/n by less than an ulp
        assert!(r.mean_limit.as_ref().unwrap().norm() <= 2.0 / 2000.0 + 1e-15);
        assert!(r.mean_matches_proj, "{r}");
        assert!(!r.contradiction_case);
        assert_eq!(r.window, 200);
        assert_eq!(r.mean_gaps.len(), 2000);
    }

    #[test]
    fn rotation_analysis() {
        let t = CatalogEntry::Rotation { theta: PI / 3.0, center: [0.0, 0.0] }.mapping();
        let approx = approx_for(&t);
        let trace = iterate(&t, &Point::from([1.0, 0.0]), 2000, &approx).unwrap();
        let r = analyze(&trace, &approx, TOL).unwrap();
        assert!(r.mean_matches_proj, "{r}");
        assert!(r.proj_limit.norm() <= 2.0 / 2000.0 + r.resolution);
        assert!(r.proj_cauchy_residual <= TOL);
    }

    #[test]
    fn square_from_one_is_the_contradiction_case() {
        let t = CatalogEntry::Square.mapping();
        let approx = approx_for(&t);
        let trace = iterate(&t, &Point::from(1.0), 2000, &approx).unwrap();
        let r = analyze(&trace, &approx, TOL).unwrap();
        assert_eq!(r.mean_limit, Some(Point::from(1.0)));
        assert!(r.contradiction_case);
        assert!(!r.mean_matches_proj);
        assert_eq!(r.hypothesis, ClusterHypothesis::Failed);
        assert!(r.membership_violation.unwrap() >= 0.9);
    }

    #[test]
    fn short_traces_are_rejected() {
        let t = CatalogEntry::Halving.mapping();
        let approx = approx_for(&t);
        let trace = iterate(&t, &Point::from(1.0), 49, &approx).unwrap();
        assert!(matches!(analyze(&trace, &approx, TOL), Err(Error::TraceTooShort { len: 49, min: 50 })));
        assert_eq!(tail_window(2000), 200);
        assert_eq!(tail_window(120), 50);
        assert_eq!(tail_window(50), 50);
    }

    #[test]
    fn cluster_points_are_attractive() {
        let cases = [
            (CatalogEntry::Rotation { theta: PI / 2.0, center: [0.0, 0.0] }.mapping(), Point::from([1.0, 0.0])),
            (CatalogEntry::Halving.mapping(), Point::from(1.0)),
            (
                CatalogEntry::Projection { set: crate::hilbert::ConvexSet::ball(Point::zeros(2), 1.0).unwrap() }
                    .mapping(),
                Point::from([3.0, 0.0]),
            ),
        ];
        for (t, x) in cases {
            let approx = approx_for(&t);
            let trace = iterate(&t, &x, 2000, &approx).unwrap();
            let samples = SampleSchedule::default().generate(&t);
            let r = cluster_attractiveness(&trace, &t, &samples, TOL).unwrap();
            assert!(r.passed, "{}: {r}", t.label());
        }
    }

    #[test]
    fn cluster_check_needs_a_declared_lambda() {
        let t = CatalogEntry::Square.mapping();
        let approx = approx_for(&t);
        let trace = iterate(&t, &Point::from(0.5), 100, &approx).unwrap();
        let samples = SampleSchedule::default().generate(&t);
        assert!(matches!(cluster_attractiveness(&trace, &t, &samples, TOL), Err(Error::Precondition(_))));
    }

    #[test]
    fn fejer_residuals_are_nonpositive_on_catalog_runs() {
        let runs = [
            (CatalogEntry::Halving.mapping(), Point::from(1.0)),
            (CatalogEntry::Square.mapping(), Point::from(0.5)),
            (CatalogEntry::AffineContraction { center: [0.0, 0.0], rho: 0.5, angle: PI / 4.0 }.mapping(), Point::from([1.0, 1.0])),
        ];
        for (t, x) in runs {
            let trace = iterate(&t, &x, 500, &approx_for(&t)).unwrap();
            let worst = trace.fejer_residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(worst <= 1e-12, "{}: {worst}", t.label());
        }
    }

    #[test]
    fn csv_has_blank_cells_where_undefined() {
        let t = CatalogEntry::Halving.mapping();
        let approx = approx_for(&t);
        let trace = iterate(&t, &Point::from(1.0), 60, &approx).unwrap();
        let r = analyze(&trace, &approx, TOL).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, Some(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,orbit_1,mean_1,proj_1,fejer_residual,mean_gap");
        assert_eq!(lines.len(), 62);
        assert!(lines[1].starts_with("0,1.0000000000000000e0,,"));
        assert!(lines[1].ends_with(','));
        assert!(lines[61].split(',').nth(4).unwrap().is_empty());
        let z: f64 = lines[5].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(z, trace.means[4][0]);
    }
}
