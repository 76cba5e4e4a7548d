//! Consistency checking for quantum measurement reasoning: Born-rule and
//! Kraus-rule auditing, Choi-based complete-positivity tests, Dutch-book
//! reflection arguments, dynamics derived from irrelevance judgments, and
//! continuous-measurement trajectories checked against the Lindblad master
//! equation.
//!
//! The crate is organized around small validated value types (states,
//! effects, measurements, channels, price books) and pure operations on
//! them. Every value is immutable after construction and safe to share
//! across threads. Randomness always flows through explicit seeds.

pub mod channels;
pub mod dynamics;
pub mod error;
pub mod matrix;
pub mod quantum;
pub mod reflection;
pub mod sample;
pub mod trajectories;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, Spectrum, Subsystem};
pub use quantum::{ConsistencyVerdict, DensityMatrix, Effect, Povm, ProbVector};

pub use channels::{Channel, ChoiMatrix, KrausMap, StandardChannelKind, StinespringDilation};
pub use dynamics::{DynamicsAssignment, IndexedState, IrrelevanceJudgment};
pub use reflection::{ClassicalVerdict, DutchBook, PriceBook, QuantumVerdict, ReflectionScenario};
pub use trajectories::{EnsembleSummary, LindbladModel, TrajectoryRecord, TwoLevelAtomParams};
