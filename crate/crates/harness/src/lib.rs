//! Files, instance generation, benchmarking and the `flowpack` command line.

use std::path::{Path, PathBuf};

use flowpack::model::{InstanceError, ParseRationalError};
use flowpack::oracle::OracleError;
use flowpack::ptas::PtasError;
use thiserror::Error;

pub mod bench;
pub mod cli;
pub mod files;
pub mod generate;

pub use bench::{run_bench, BenchOptions, BenchmarkRow, CSV_HEADER};
pub use files::{instance_digest, parse_instance, read_instance, verify, write_instance, InstanceFile, SolutionFile};
pub use generate::{generate_instance, Profile};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed file: {0}")]
    Json(serde_json::Error),
    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),
    #[error("bad number in {field}: {source}")]
    BadNumber { field: String, source: ParseRationalError },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("unknown profile {0:?}")]
    InvalidProfile(String),
    #[error(transparent)]
    Ptas(#[from] PtasError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{} violation(s): {}", .0.len(), .0.join("; "))]
    Violations(Vec<String>),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// 1 for violations, 2 for bad input, 3 when an oracle refuses.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Violations(_) => 1,
            HarnessError::Oracle(OracleError::BudgetExceeded { .. }) => 3,
            HarnessError::Ptas(PtasError::SubsetTooLarge(_)) => 3,
            _ => 2,
        }
    }
}
