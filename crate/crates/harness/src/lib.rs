//! Config-driven runner around the `semiretract` library: builds scenarios
//! from TOML, runs the verification suites, and emits JSON/CSV reports.

pub mod commands;
pub mod config;
pub mod families;
pub mod oracle;
pub mod output;
pub mod report;
pub mod scenario;

use std::path::Path;

pub use commands::Outcome;
pub use config::ExperimentConfig;
pub use report::{CriterionResult, RunReport, Status};

/// Exit status for configuration and input errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for criterion failures and run-time errors.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mean,
    Retract { verify: bool },
    Verify,
    Holder,
    Threshold,
}

/// Loads `config` (unless the command needs none), applies a seed override,
/// and runs the command.
pub fn run(command: Command, config: Option<&Path>, seed: Option<u64>) -> Result<Outcome, CliError> {
    if command == Command::Threshold {
        return commands::cmd_threshold();
    }
    let path = config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    match command {
        Command::Mean => commands::cmd_mean(&config),
        Command::Retract { verify } => commands::cmd_retract(&config, verify),
        Command::Verify => commands::cmd_verify(&config, false),
        Command::Holder => commands::cmd_verify(&config, true),
        Command::Threshold => unreachable!(),
    }
}
