//! Steady-state analytics, flow relaxations and verification tools for
//! shared-vehicle systems modeled as closed queueing networks.

pub mod error;
pub mod gordon_newell;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod policy;
pub mod relax;
pub mod scalar;
pub mod sim;
pub mod verify;

pub use error::{Diagnostic, DiagnosticCode, Error, Result};
pub use matrix::Matrix;
pub use model::{Instance, QuantilePolicy, RewardKind, Units, ValueDistribution};
pub use scalar::{Real, Scalar};

/// Exact rational scalar for the generic kernels.
pub type Rational = num_rational::Ratio<i128>;
