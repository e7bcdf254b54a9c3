use std::fmt;

use serde_json::json;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable or invalid configuration (exit 2).
    Config { message: String, missing: Vec<String> },
    /// The simulation itself failed, or its outputs could not be written (exit 3).
    Simulation(String),
    /// `--assert` was given and a headline value missed its expectation (exit 4).
    Assert(Vec<String>),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config { message: message.into(), missing: Vec::new() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Simulation(_) => 3,
            CliError::Assert(_) => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config { message, missing } => json!({ "error": "config", "message": message, "missing": missing }),
            CliError::Simulation(message) => json!({ "error": "simulation", "message": message }),
            CliError::Assert(misses) => json!({ "error": "assert", "message": "headline values outside tolerance", "misses": misses }),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { message, .. } => write!(f, "config error: {message}"),
            CliError::Simulation(message) => write!(f, "simulation error: {message}"),
            CliError::Assert(misses) => write!(f, "assertion failed: {}", misses.join("; ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<holonomy::error::Error> for CliError {
    fn from(e: holonomy::error::Error) -> Self {
        CliError::Simulation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Simulation(format!("cannot write output: {e}"))
    }
}
