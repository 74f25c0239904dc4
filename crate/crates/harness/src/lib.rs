//! Command-line harness: validate extraction documents, score them against
//! targets, drive external extractors through the validation-retry loop and
//! build leaderboards from run directories.

use std::path::{Path, PathBuf};

use expbench_core::interchange::DecodeError;
use expbench_core::validation::ValidationIssue;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod document;
pub mod extractor;
pub mod leaderboard;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("malformed run file: {0}")]
    Format(String),
    #[error("{path}: cannot decode:\n{error}")]
    DecodeFailed { path: PathBuf, error: DecodeError },
    #[error("{path}: target document has {} error(s)", .issues.len())]
    TargetInvalid {
        path: PathBuf,
        issues: Vec<ValidationIssue>,
    },
    #[error("no scored runs found")]
    EmptyRunSet,
}

impl HarnessError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// 1 for domain failures, 2 for I/O and usage problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } | HarnessError::Config(_) | HarnessError::Format(_) => 2,
            HarnessError::DecodeFailed { .. }
            | HarnessError::TargetInvalid { .. }
            | HarnessError::EmptyRunSet => 1,
        }
    }
}

pub fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}
