//! Noise channels, readout error and Pauli-basis state tomography.

pub mod noise;
pub mod tomography;

pub use noise::*;
pub use tomography::*;

use crate::states::StateError;

#[derive(Debug, thiserror::Error)]
pub enum TomographyError {
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("missing measurement settings: {}", missing.join(", "))]
    IncompleteSettings { missing: Vec<String> },
    #[error("inconsistent shot counts: {0}")]
    InconsistentShots(String),
    #[error("readout confusion matrix for qubit {qubit} is singular")]
    SingularConfusionMatrix { qubit: usize },
    #[error("malformed counts: {0}")]
    MalformedCounts(String),
    #[error("counts JSON: {0}")]
    Json(String),
    #[error(transparent)]
    State(#[from] StateError),
}
