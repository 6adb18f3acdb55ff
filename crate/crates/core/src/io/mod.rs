//! Configuration files, checkpoints, CSV output and the command
//! implementations behind the `chvi` binary.

mod checkpoint;
mod commands;
mod config;
mod manifest;
mod plotdata;
mod table;

pub use checkpoint::{read_checkpoint, resume, write_checkpoint, Checkpoint, MAGIC};
pub use commands::{
    check_potential, energy_report, execute_run, execute_sweep, EnergyReport, PotentialCheck, RunSummary,
    SweepSummary, CHECKPOINT_DIR, CONFIG_FILE, ENERGY_REPORT_FILE, MANIFEST_FILE, POTENTIAL_TABLE_FILE, RUN_CSV,
    SWEEP_CSV, SWEEP_HEADER,
};
pub use config::{config_hash, parse_config, InitSpec, RunConfig, DEFAULT_OUTPUT_EVERY, KEYS};
pub use manifest::{OutputEntry, RunManifest, ARTIFACT_VERSION};
pub use plotdata::emit_plotdata;
pub use table::{fmt as format_float, Table, RUN_HEADER};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::harness::HarnessError;
use crate::potential::PotentialError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config: missing required key {0}")]
    MissingKey(String),
    #[error("initial data: {0}")]
    InitFile(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("refused: {0}")]
    Refused(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

pub type Result<T> = std::result::Result<T, IoError>;

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn from_csv(path: &Path, e: csv::Error) -> Self {
        IoError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Process exit code: 2 for bad configuration, 3 for numerical
    /// failure, 4 for file problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Config { .. } | IoError::MissingKey(_) | IoError::InitFile(_) | IoError::Potential(_) => 2,
            IoError::Dynamics(DynamicsError::StepFailure { .. }) => 3,
            IoError::Dynamics(_) => 2,
            IoError::Harness(HarnessError::InvalidPlan(_)) => 2,
            IoError::Harness(HarnessError::Dynamics(DynamicsError::StepFailure { .. })) => 3,
            IoError::Harness(HarnessError::Dynamics(_)) => 2,
            IoError::Harness(HarnessError::Incomplete(_)) | IoError::Numerical(_) => 3,
            IoError::Checkpoint(_) | IoError::Io { .. } | IoError::Csv { .. } | IoError::Refused(_) => 4,
        }
    }
}
