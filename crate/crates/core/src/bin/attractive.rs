use std::path::PathBuf;
use std::process::ExitCode;

use attractive::cli::{self, CliError, ConfigError, CHECK_NAMES};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "attractive", version, about = "Attractive-point experiments on R^d")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check listed in a config file.
    Run { config: PathBuf },
    /// List the built-in mappings with their known fixed and attractive sets.
    ListCatalog {
        /// One tab-separated record per line.
        #[arg(long)]
        machine: bool,
    },
    /// Run a single named check against a config file.
    Check { name: String, config: PathBuf },
}

fn execute(command: Command) -> Result<i32, CliError> {
    let (config, checks) = match command {
        Command::ListCatalog { machine } => {
            print!("{}", cli::list_catalog(machine));
            return Ok(0);
        }
        Command::Run { config } => (cli::load_config(&config)?, None),
        Command::Check { name, config } => {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(CliError::Config(ConfigError(format!(
                    "unknown check '{name}' (known: {})",
                    CHECK_NAMES.join(", ")
                ))));
            }
            (cli::load_config(&config)?, Some(vec![name]))
        }
    };
    let config = match checks {
        Some(c) => config.with_checks(c),
        None => config,
    };
    let outcome = cli::run(&config, &cli::output_root_from_env())?;
    print!("{}", outcome.report);
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
