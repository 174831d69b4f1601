//! Config-driven experiment runner behind the `attractive` binary.
//!
//! A config is a flat text file of `key = value` lines:
//!
//! ```text
//! mapping.id = rotation
//! mapping.params = 1.0471975511965976
//! start = 1, 0
//! n_max = 2000
//! sample.seed = 7
//! checks = theorem_3_1, lemma_4_1
//! ```

mod config;
mod run;

pub use config::{ConfigError, ExperimentConfig, Tolerances, CHECK_NAMES};
pub use run::{
    list_catalog, load_config, output_root_from_env, run, CheckOutcome, CliError, RunOutcome, Status,
    OUTPUT_ROOT_ENV,
};
