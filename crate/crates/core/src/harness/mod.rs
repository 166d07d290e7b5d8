//! Experiment harness: flat-file configuration, pure seed derivation, the
//! phase pipeline with its on-disk artifacts, and the command-line
//! interface.

pub mod cli;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::generation::TrainError;
use crate::models::ModelError;
use crate::tensor::TensorError;
use crate::theory::TheoryError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing artifact: {path} (run the earlier phase first)")]
    MissingArtifact { path: PathBuf },
    #[error("{phase} phase failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl HarnessError {
    /// Numeric divergence maps to a distinct process exit code.
    pub fn is_divergence(&self) -> bool {
        match self {
            HarnessError::Train(TrainError::Diverged { .. }) => true,
            HarnessError::Phase { source, .. } => source.is_divergence(),
            _ => false,
        }
    }

    pub(crate) fn in_phase(phase: &'static str) -> impl FnOnce(HarnessError) -> HarnessError {
        move |source| HarnessError::Phase {
            phase,
            source: Box::new(source),
        }
    }
}
