//! Experiment runner: builds everything a config asks for, runs the checks,
//! writes the artifacts.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::config::{ConfigError, ExperimentConfig};
use crate::attractive_set::{check_projected_attractive_is_fixed, check_projection_identity, find_fixed_points, AttractiveApprox, FixedSetApprox};
use crate::ergodic::{analyze, cluster_attractiveness, iterate, write_trace_csv, CesaroTrace, ConvergenceReport, MIN_TRACE, HYBRID_SEED};
use crate::extension::{extend, verify_extension_fixed_set, verify_extension_quasinonexpansive};
use crate::hilbert::{BoxSet, ConvexSet, Point};
use crate::mappings::{lambda_hybrid_residual, random_in_box, random_pairs, random_points, uniform_grid, CatalogInfo, Mapping};
use crate::Error;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "ATTRACTIVE_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "attractive-output";

const PROJECTED_MEMBERS: usize = 10;
const IDENTITY_POINTS: usize = 20;
const EXTENSION_MEMBERS: usize = 3;
const EXTENSION_PROBES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Ambiguous,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Ambiguous => "AMBIGUOUS",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub details: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &str, status: Status, details: Vec<String>) -> Self {
        Self { name: name.to_string(), status, details }
    }

    fn failed(name: &str, e: &Error) -> Self {
        Self::new(name, Status::Fail, vec![format!("error: {e}")])
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub checks: Vec<CheckOutcome>,
    pub report: String,
    pub trace_path: Option<PathBuf>,
    pub approx_path: Option<PathBuf>,
    pub report_path: PathBuf,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    /// 0 when every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "invalid config: {e}"),
            CliError::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// `$ATTRACTIVE_OUTPUT_ROOT`, or `attractive-output` in the working directory.
pub fn output_root_from_env() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT), PathBuf::from)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ExperimentConfig::parse(&text).map_err(CliError::Config)
}

/// Human-readable or tab-separated listing of the catalog.
pub fn list_catalog(machine: bool) -> String {
    CatalogInfo::all()
        .iter()
        .map(|info| if machine { format!("{}\n", info.to_record()) } else { info.to_text() })
        .collect()
}

/// Search-grid nodes per axis, odd so that box centers are included.
fn default_fixed_grid(dim: usize) -> usize {
    match dim {
        1 => 201,
        2 => 21,
        _ => 11,
    }
}

fn sweep_grid(dim: usize) -> usize {
    match dim {
        1 => 401,
        2 => 41,
        _ => 11,
    }
}

/// `region` grown by its width on each side.
fn widened(region: &BoxSet) -> BoxSet {
    let pad: Vec<f64> = region.lower().iter().zip(region.upper()).map(|(lo, hi)| (hi - lo).max(1.0)).collect();
    let lower = region.lower().iter().zip(&pad).map(|(lo, p)| lo - p).collect();
    let upper = region.upper().iter().zip(&pad).map(|(hi, p)| hi + p).collect();
    BoxSet::new(lower, upper).expect("widened box is valid")
}

/// Up to `k` approximation members spread over `region`, falling back to
/// projections of the samples.
fn approx_members(approx: &AttractiveApprox, region: &BoxSet, k: usize) -> Result<Vec<Point>, Error> {
    let inside: Vec<Point> =
        uniform_grid(region, sweep_grid(region.dim())).into_iter().filter(|g| approx.contains(g)).collect();
    if !inside.is_empty() {
        let step = (inside.len() as f64 / k as f64).max(1.0);
        return Ok((0..k.min(inside.len())).map(|i| inside[(i as f64 * step) as usize].clone()).collect());
    }
    let mut out: Vec<Point> = Vec::new();
    for x in approx.sample_points() {
        let p = approx.project(x)?.point;
        if out.iter().all(|q| q.dist(&p) > 1e-9) {
            out.push(p);
        }
        if out.len() == k {
            break;
        }
    }
    Ok(out)
}

struct Experiment<'a> {
    config: &'a ExperimentConfig,
    mapping: Mapping,
    approx: AttractiveApprox,
    fixed: FixedSetApprox,
    region: BoxSet,
    trace: Result<CesaroTrace, Error>,
    analysis: Option<Result<ConvergenceReport, Error>>,
}

impl Experiment<'_> {
    fn run_check(&self, name: &str) -> CheckOutcome {
        let result = match name {
            "lemma_2_3" => self.projected_points_fixed(),
            "lemma_2_4" => self.projection_identity(),
            "extension" => self.extension(),
            "theorem_3_1" => self.mean_convergence(),
            "lemma_4_1" => self.cluster_attractive(),
            "corollary_4_1" => self.hybrid_convergence(),
            other => unreachable!("check names are validated: {other}"),
        };
        result.unwrap_or_else(|e| CheckOutcome::failed(name, &e))
    }

    fn closed_domain(&self) -> Result<&ConvexSet, Error> {
        self.mapping.domain().as_convex().ok_or_else(|| {
            Error::Precondition(format!(
                "{} has no closed convex domain; set domain.lower/domain.upper",
                self.mapping.label()
            ))
        })
    }

    fn projected_points_fixed(&self) -> Result<CheckOutcome, Error> {
        let c = self.closed_domain()?;
        let tol = self.config.tolerances.fixed;
        let members = approx_members(&self.approx, &widened(&self.region), PROJECTED_MEMBERS)?;
        let mut details = Vec::new();
        let (mut certified, mut failures) = (0, 0);
        for z in &members {
            match check_projected_attractive_is_fixed(&self.mapping, c, z, tol) {
                Ok(true) => certified += 1,
                Ok(false) => {
                    failures += 1;
                    details.push(format!("witness: P_C({z}) is not fixed at tol {tol:e}"));
                }
                Err(Error::Precondition(msg)) => details.push(format!("skipped (not certified attractive): {msg}")),
                Err(e) => return Err(e),
            }
        }
        details.insert(0, format!("{certified} of {} members project to fixed points (tol {tol:e})", members.len()));
        let status = match (failures, certified) {
            (0, 0) => Status::Ambiguous,
            (0, _) => Status::Pass,
            _ => Status::Fail,
        };
        Ok(CheckOutcome::new("lemma_2_3", status, details))
    }

    fn projection_identity(&self) -> Result<CheckOutcome, Error> {
        self.closed_domain()?;
        let bound = self.config.identity_gap_tol;
        let points = random_points(&self.mapping, IDENTITY_POINTS, self.config.schedule.seed);
        let mut worst = (0.0, None);
        for x in &points {
            let gap = check_projection_identity(&self.mapping, &self.approx, &self.fixed, x)?;
            if gap > worst.0 || worst.1.is_none() {
                worst = (gap, Some(x.clone()));
            }
        }
        let status = if worst.0 <= bound { Status::Pass } else { Status::Fail };
        let witness = worst.1.map_or("none".to_string(), |w| w.to_string());
        Ok(CheckOutcome::new(
            "lemma_2_4",
            status,
            vec![
                format!(
                    "max |P_F x - P_A x| = {:.6e} over {} points, bound {bound:e}, witness {witness}",
                    worst.0,
                    points.len()
                ),
                format!("{} fixed points found", self.fixed.points.len()),
            ],
        ))
    }

    fn extension(&self) -> Result<CheckOutcome, Error> {
        let tol = self.config.tolerances.fixed;
        let ext = extend(&self.mapping, self.approx.clone(), self.fixed.clone(), tol)?;
        let wide = widened(&self.region);
        let grid = uniform_grid(&wide, sweep_grid(wide.dim()));
        let fixed_set = verify_extension_fixed_set(&ext, &grid, tol)?;
        let members = approx_members(&self.approx, &wide, EXTENSION_MEMBERS)?;
        let probes = random_in_box(&wide, EXTENSION_PROBES, self.config.schedule.seed);
        let qne = verify_extension_quasinonexpansive(&ext, &members, &probes, self.config.tolerances.residual)?
            .with_seed(self.config.schedule.seed);
        let status = if fixed_set.passed && qne.passed { Status::Pass } else { Status::Fail };
        Ok(CheckOutcome::new(
            "extension",
            status,
            vec![
                format!("fixed set = approximation on grid: {fixed_set}"),
                format!("quasinonexpansive w.r.t. {} members: {qne}", members.len()),
                format!("boundary-ambiguous band: ({tol:e}, {:e}]", tol * crate::extension::AMBIGUOUS_FACTOR),
            ],
        ))
    }

    fn analysis(&self) -> Result<&ConvergenceReport, Error> {
        match &self.analysis {
            Some(Ok(r)) => Ok(r),
            Some(Err(e)) => Err(Error::Precondition(format!("analysis failed: {e}"))),
            None => Err(Error::TraceTooShort { len: self.config.n_max, min: MIN_TRACE }),
        }
    }

    fn trace(&self) -> Result<&CesaroTrace, Error> {
        self.trace.as_ref().map_err(|e| Error::Precondition(format!("iteration failed: {e}")))
    }

    fn mean_convergence(&self) -> Result<CheckOutcome, Error> {
        let r = self.analysis()?;
        let status = if self.config.expect_contradiction {
            if r.contradiction_case {
                Status::Pass
            } else {
                Status::Fail
            }
        } else if r.mean_matches_proj {
            Status::Pass
        } else if r.mean_limit.is_none() {
            Status::Ambiguous
        } else {
            Status::Fail
        };
        let mut details = vec![format!(
            "mode: {}",
            if self.config.expect_contradiction { "expect contradiction" } else { "expect convergence" }
        )];
        details.extend(r.to_string().lines().map(str::to_string));
        if status == Status::Fail {
            details.push(format!("witness: start {}", self.config.start));
        }
        Ok(CheckOutcome::new("theorem_3_1", status, details))
    }

    fn cluster_attractive(&self) -> Result<CheckOutcome, Error> {
        let trace = self.trace()?;
        let samples = self.approx.sample_points();
        let r = cluster_attractiveness(trace, &self.mapping, samples, self.config.tolerances.residual)?;
        let status = if r.passed { Status::Pass } else { Status::Fail };
        Ok(CheckOutcome::new(
            "lemma_4_1",
            status,
            vec![format!("cluster {} attractive on {} samples: {r}", trace.last_mean(), samples.len())],
        ))
    }

    fn hybrid_convergence(&self) -> Result<CheckOutcome, Error> {
        let lambda = self
            .mapping
            .declared_lambda()
            .ok_or_else(|| Error::Precondition(format!("{} declares no λ", self.mapping.label())))?;
        let pairs = random_pairs(&self.mapping, 200, HYBRID_SEED);
        let hybrid =
            lambda_hybrid_residual(&self.mapping, lambda, &pairs, self.config.tolerances.residual)?.with_seed(HYBRID_SEED);
        let r = self.analysis()?;
        let status = if hybrid.passed && r.mean_matches_proj { Status::Pass } else { Status::Fail };
        let mut details = vec![format!("λ = {lambda}: {hybrid}")];
        details.push(format!(
            "mean_matches_proj = {} (|mean_limit - proj_limit| = {}, combined_tol = {:e})",
            r.mean_matches_proj,
            r.mean_proj_gap().map_or("NONE".to_string(), |g| format!("{g:e}")),
            r.combined_tol
        ));
        Ok(CheckOutcome::new("corollary_4_1", status, details))
    }
}

fn build_mapping(config: &ExperimentConfig) -> Mapping {
    let base = config.entry.mapping();
    match &config.restrict_to {
        Some(b) => base.restrict(ConvexSet::Box(b.clone()), None),
        None => base,
    }
}

/// Runs every check in the config and writes the artifacts under the output
/// directory: `trace-<hash>.csv`, `approx-<hash>.txt`, `report-<hash>.txt`.
pub fn run(config: &ExperimentConfig, output_root: &Path) -> Result<RunOutcome, CliError> {
    let hash = config.hash();
    let output_dir = config.output_dir.clone().unwrap_or_else(|| output_root.join(&hash));
    fs::create_dir_all(&output_dir).map_err(io_err(&output_dir))?;

    let mapping = build_mapping(config);
    if !mapping.domain().contains(&config.start) {
        return Err(CliError::Config(ConfigError(format!(
            "start {} is outside the domain of {}",
            config.start,
            mapping.label()
        ))));
    }
    let tol = config.tolerances;
    let mut report = String::new();
    let _ = writeln!(report, "attractive experiment report");
    let _ = writeln!(report, "config hash: {hash}");
    let _ = writeln!(report, "mapping: {} params={:?}", mapping.label(), config.mapping_params);
    let _ = writeln!(report, "domain: {:?}", mapping.domain());
    let _ = writeln!(report, "start: {}", config.start);
    let _ = writeln!(report, "n_max: {}", config.n_max);
    let _ = writeln!(
        report,
        "sample schedule: grid={} random={} seed={}",
        config.schedule.grid, config.schedule.random, config.schedule.seed
    );
    let _ = writeln!(
        report,
        "tolerances: fixed={:e} residual={:e} projection={:e}",
        tol.fixed, tol.residual, tol.projection
    );

    let approx = AttractiveApprox::from_schedule(&mapping, &config.schedule, tol.fixed)
        .map(|a| a.with_projection_tol(tol.projection));
    let approx = match approx {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(report, "approximation: error: {e}");
            let checks: Vec<CheckOutcome> = config.checks.iter().map(|c| CheckOutcome::failed(c, &e)).collect();
            return finish(config, hash, output_dir, report, checks, None, None);
        }
    };
    let _ = writeln!(
        report,
        "approximation: {} halfspaces from {} samples{}",
        approx.len(),
        approx.sample_points().len(),
        if approx.is_whole_space() { " (whole space: every sample is fixed)" } else { "" }
    );

    let region = mapping.domain().sampling_box(mapping.probe());
    let per_axis = config.fixed_grid.unwrap_or_else(|| default_fixed_grid(mapping.dim()));
    let fixed = find_fixed_points(&mapping, &uniform_grid(&region, per_axis), tol.fixed);
    let _ = writeln!(report, "fixed points found: {}", fixed.points.len());

    let trace = iterate(&mapping, &config.start, config.n_max, &approx);
    let analysis = match &trace {
        Ok(t) if config.n_max >= MIN_TRACE => Some(analyze(t, &approx, tol.residual)),
        _ => None,
    };
    if let Err(e) = &trace {
        let _ = writeln!(report, "iteration: error: {e}");
    }

    let experiment = Experiment { config, mapping, approx, fixed, region, trace, analysis };
    let checks: Vec<CheckOutcome> = config.checks.iter().map(|c| experiment.run_check(c)).collect();

    let approx_path = output_dir.join(format!("approx-{hash}.txt"));
    fs::write(&approx_path, experiment.approx.to_table()).map_err(io_err(&approx_path))?;
    let trace_path = match &experiment.trace {
        Ok(t) => {
            let path = output_dir.join(format!("trace-{hash}.csv"));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            let analysis = experiment.analysis.as_ref().and_then(|a| a.as_ref().ok());
            write_trace_csv(t, analysis, io::BufWriter::new(file)).map_err(|e| CliError::Io {
                path: path.clone(),
                source: match e {
                    Error::Io(io) => io,
                    other => io::Error::other(other.to_string()),
                },
            })?;
            Some(path)
        }
        Err(_) => None,
    };
    finish(config, hash, output_dir, report, checks, trace_path, Some(approx_path))
}

fn finish(
    config: &ExperimentConfig,
    hash: String,
    output_dir: PathBuf,
    mut report: String,
    checks: Vec<CheckOutcome>,
    trace_path: Option<PathBuf>,
    approx_path: Option<PathBuf>,
) -> Result<RunOutcome, CliError> {
    let _ = writeln!(report);
    for c in &checks {
        let _ = writeln!(report, "[{}] {}", c.name, c.status);
        for d in &c.details {
            let _ = writeln!(report, "  {d}");
        }
    }
    let passed = checks.iter().filter(|c| c.status == Status::Pass).count();
    let _ = writeln!(report);
    let _ = writeln!(
        report,
        "summary: {} ({passed}/{} checks passed, seed {})",
        if passed == checks.len() { "PASS" } else { "FAIL" },
        checks.len(),
        config.schedule.seed
    );
    if let Some(p) = &trace_path {
        let _ = writeln!(report, "trace: {}", p.display());
    }
    let report_path = output_dir.join(format!("report-{hash}.txt"));
    fs::write(&report_path, &report).map_err(io_err(&report_path))?;
    Ok(RunOutcome { config_hash: hash, output_dir, checks, report, trace_path, approx_path, report_path })
}
