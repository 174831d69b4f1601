//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::attractive_set::DEFAULT_APPROX_TOL;
use crate::hilbert::{BoxSet, DEFAULT_TOL};
use crate::mappings::{CatalogEntry, SampleSchedule, DEFAULT_RESIDUAL_TOL};
use crate::Point;

/// Named checks a config may request.
pub const CHECK_NAMES: [&str; 6] = ["lemma_2_3", "lemma_2_4", "extension", "theorem_3_1", "lemma_4_1", "corollary_4_1"];

const KEYS: [&str; 17] = [
    "mapping.id",
    "mapping.params",
    "start",
    "n_max",
    "sample.grid",
    "sample.random",
    "sample.seed",
    "tol.fixed",
    "tol.residual",
    "tol.projection",
    "checks",
    "output_dir",
    "expect.contradiction",
    "lemma_2_4.tol",
    "domain.lower",
    "domain.upper",
    "fixed.grid",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub fixed: f64,
    pub residual: f64,
    pub projection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { fixed: DEFAULT_APPROX_TOL, residual: DEFAULT_RESIDUAL_TOL, projection: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mapping_id: String,
    pub mapping_params: Vec<f64>,
    pub entry: CatalogEntry,
    pub start: Point,
    pub n_max: usize,
    pub schedule: SampleSchedule,
    pub tolerances: Tolerances,
    pub checks: Vec<String>,
    pub output_dir: Option<PathBuf>,
    /// The mean-convergence check passes on a detected contradiction instead of convergence.
    pub expect_contradiction: bool,
    pub identity_gap_tol: f64,
    /// Closed box the mapping is restricted to before the checks run.
    pub restrict_to: Option<BoxSet>,
    /// Nodes per axis of the fixed-point search grid.
    pub fixed_grid: Option<usize>,
    canonical: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(format!("{key}: '{v}' is not a finite number")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| err(format!("{key}: cannot parse '{}'", value.trim())))
}

fn parse_tol(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(format!("{key}: tolerance must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if raw.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(err(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let get = |k: &str| raw.get(k).map(String::as_str);

        let mapping_id = get("mapping.id").ok_or_else(|| err("missing key 'mapping.id'"))?.to_string();
        let mapping_params = parse_list("mapping.params", get("mapping.params").unwrap_or(""))?;
        let entry = CatalogEntry::from_id(&mapping_id, &mapping_params).map_err(|e| err(format!("mapping: {e}")))?;
        let dim = entry.mapping().dim();

        let start = parse_list("start", get("start").ok_or_else(|| err("missing key 'start'"))?)?;
        if start.len() != dim {
            return Err(err(format!("start: expected {dim} coordinates, found {}", start.len())));
        }
        let start = Point::new(start).map_err(|e| err(format!("start: {e}")))?;

        let n_max: usize = parse_num("n_max", get("n_max").ok_or_else(|| err("missing key 'n_max'"))?)?;
        if n_max == 0 {
            return Err(err("n_max must be at least 1"));
        }

        let defaults = SampleSchedule::default();
        let schedule = SampleSchedule {
            grid: get("sample.grid").map_or(Ok(defaults.grid), |v| parse_num("sample.grid", v))?,
            random: get("sample.random").map_or(Ok(defaults.random), |v| parse_num("sample.random", v))?,
            seed: get("sample.seed").map_or(Ok(defaults.seed), |v| parse_num("sample.seed", v))?,
        };
        if schedule.grid + schedule.random == 0 {
            return Err(err("sample.grid + sample.random must be positive"));
        }

        let d = Tolerances::default();
        let tolerances = Tolerances {
            fixed: get("tol.fixed").map_or(Ok(d.fixed), |v| parse_tol("tol.fixed", v))?,
            residual: get("tol.residual").map_or(Ok(d.residual), |v| parse_tol("tol.residual", v))?,
            projection: get("tol.projection").map_or(Ok(d.projection), |v| parse_tol("tol.projection", v))?,
        };

        let checks: Vec<String> = get("checks")
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(str::to_string)
            .collect();
        if let Some(bad) = checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
            return Err(err(format!("checks: unknown check '{bad}' (known: {})", CHECK_NAMES.join(", "))));
        }
        if checks.iter().any(|c| c == "theorem_3_1") && n_max < 50 {
            return Err(err(format!("n_max must be at least 50 for theorem_3_1, got {n_max}")));
        }

        let expect_contradiction = match get("expect.contradiction") {
            None | Some("false") => false,
            Some("true") => true,
            Some(v) => return Err(err(format!("expect.contradiction: expected true or false, got '{v}'"))),
        };
        let identity_gap_tol = get("lemma_2_4.tol").map_or(Ok(0.05), |v| parse_tol("lemma_2_4.tol", v))?;

        let restrict_to = match (get("domain.lower"), get("domain.upper")) {
            (None, None) => None,
            (Some(lo), Some(hi)) => {
                let (lo, hi) = (parse_list("domain.lower", lo)?, parse_list("domain.upper", hi)?);
                if lo.len() != dim || hi.len() != dim {
                    return Err(err(format!("domain bounds need {dim} coordinates each")));
                }
                Some(BoxSet::new(lo, hi).map_err(|e| err(format!("domain: {e}")))?)
            }
            _ => return Err(err("domain.lower and domain.upper must be given together")),
        };
        let fixed_grid = get("fixed.grid").map(|v| parse_num("fixed.grid", v)).transpose()?;
        if fixed_grid == Some(0) {
            return Err(err("fixed.grid must be positive"));
        }

        let canonical = raw
            .iter()
            .filter(|(k, _)| k.as_str() != "output_dir")
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        Ok(Self {
            mapping_id,
            mapping_params,
            entry,
            start,
            n_max,
            schedule,
            tolerances,
            checks,
            output_dir: get("output_dir").map(PathBuf::from),
            expect_contradiction,
            identity_gap_tol,
            restrict_to,
            fixed_grid,
            canonical,
        })
    }

    /// Hex prefix of the SHA-256 of the sorted settings, output directory excluded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn with_checks(mut self, checks: Vec<String>) -> Self {
        self.checks = checks;
        self
    }
}
