//! Complementarity relations for qubits and qudits: density-matrix
//! utilities, a small gate-level circuit simulator, coherence /
//! predictability / correlation measures, noisy Pauli tomography and the
//! experiment drivers behind the `ccr-lab` binary.

pub mod circuits;
pub mod exec;
pub mod experiments;
pub mod linalg;
pub mod measures;
pub mod noise_tomography;
pub mod states;

pub use circuits::{Circuit, Gate, GateKind};
pub use exec::Execution;
pub use linalg::ComplexMatrix;
pub use measures::{report, MeasureReport};
pub use noise_tomography::{NoiseParams, TomographyError};
pub use states::{DensityMatrix, StateVector, WernerParams};
pub use experiments::{Dataset, Mode, RunConfig};
