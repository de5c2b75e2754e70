//! Experiment plumbing: configs, seeded sweeps, CSV persistence, log-log
//! rate fits and certifier runs.

mod certify;
mod config;
mod fit;
mod run;

pub use certify::{certify_files, certify_instance, CertifyOutcome, CertifyRequest};
pub use config::{build_instance, CenterDist, ExperimentConfig, InstanceSpec, Sweep};
pub use fit::{ols, rate_fit, Axis, FitPoint, RateFit, Statistic};
pub use run::{
    read_results, rows_to_csv, run_experiment, run_to_file, run_with_registry, write_results,
    Cell, ResultRow, CSV_HEADER,
};

use std::path::Path;

use thiserror::Error;

use crate::loss::LossError;
use crate::optim::OptimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad results file {path}: {message}")]
    Results { path: String, message: String },
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 3 for filesystem failures, 2 for everything a
    /// user can fix by editing inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } | HarnessError::Loss(LossError::Io { .. }) => 3,
            HarnessError::Optim(OptimError::Loss(LossError::Io { .. })) => 3,
            _ => 2,
        }
    }
}
