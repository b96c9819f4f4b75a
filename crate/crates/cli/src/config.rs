//! Config-file loading and the error-to-exit-code mapping.
//!
//! A config file is a single JSON object. Two keys belong to the CLI layer —
//! `out_dir` (where result files go) and `sweep` (the comparison grid) — and
//! every remaining key must belong to the run configuration itself. Unknown
//! keys are rejected by name so typos surface immediately instead of being
//! silently replaced by defaults.

use qkeep_core::RunConfig;
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};

/// Errors surfaced to the shell. The variants carry the exit-code contract:
/// configuration problems exit 2, capacity problems exit 3, I/O problems
/// exit 4, and faults that no input should be able to trigger exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Capacity(String),
    Io(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Capacity(msg) => write!(f, "capacity error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qkeep_core::Error> for CliError {
    fn from(err: qkeep_core::Error) -> Self {
        use qkeep_core::Error as E;
        match err {
            // Take inner messages where the core Display would repeat our
            // own "config error:" / "i/o error:" prefix.
            E::Config(msg) => CliError::Config(msg),
            E::Io(io) => CliError::Io(io.to_string()),
            e @ (E::Capacity { .. } | E::QubitCount { .. }) => CliError::Capacity(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

/// Sweep section of a config file: the grid of `eps_step` values on which
/// corrected storage is compared against the bare-qubit control arm.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eps_grid: Vec<f64>,
}

/// A parsed config file: the run itself plus CLI-level plumbing.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub run: RunConfig,
    pub out_dir: Option<PathBuf>,
    pub sweep: Option<SweepSection>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses JSON config text. `out_dir` and `sweep` are peeled off first;
    /// the remainder must deserialize into a [`RunConfig`], whose parser
    /// names any unknown key in its error. Range checks (`validate`) are the
    /// caller's job because flag overrides are applied after parsing.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CliError::Config("config root must be a JSON object".into()))?;
        let out_dir = match obj.remove("out_dir") {
            None => None,
            Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::Config("out_dir must be a string path".into())),
        };
        let sweep = obj
            .remove("sweep")
            .map(serde_json::from_value::<SweepSection>)
            .transpose()
            .map_err(|e| CliError::Config(format!("sweep section: {e}")))?;
        let run: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(ConfigFile {
            run,
            out_dir,
            sweep,
        })
    }
}
