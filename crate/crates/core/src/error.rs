use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("reward derivative is one-sided at q = {q}")]
    Boundary { q: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid instance: {}", format_diagnostics(.0))]
    InvalidInstance(Vec<Diagnostic>),
    #[error("node {node} has zero effective service rate but receives units")]
    DeadNode { node: usize },
    #[error("reducible chain: states/nodes {closed:?} form a closed class that cannot reach the rest")]
    Reducible { closed: Vec<usize> },
    #[error("normalization constant out of range (log2 exponent {exponent})")]
    Range { exponent: f64 },
    #[error("state space has {size} states, cap is {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("infeasible program; violated rows {rows:?}")]
    Infeasible { rows: Vec<usize> },
    #[error("unbounded program (entering column {column})")]
    Unbounded { column: usize },
    #[error("reward curve on edge ({i},{j}) is not concave (second difference {worst:e})")]
    NonConcave { i: usize, j: usize, worst: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate policy: {0}")]
    Degenerate(String),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// One violated instance invariant, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub pointer: String,
    pub code: DiagnosticCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    Schema,
    Dimension,
    IndexOutOfRange,
    SelfLoopDemand,
    NegativeRate,
    DuplicateEdge,
    NoDemand,
    NotStronglyConnected,
    MissingDistribution,
    InvalidDistribution,
    InvalidUnits,
    InvalidTravelTime,
    InvalidRedirectCost,
    InvalidMatchingEdge,
    InvalidPriceGrid,
    InvalidRequirement,
}

impl DiagnosticCode {
    pub fn label(self) -> &'static str {
        match self {
            DiagnosticCode::Schema => "schema violation",
            DiagnosticCode::Dimension => "dimension mismatch",
            DiagnosticCode::IndexOutOfRange => "station index out of range",
            DiagnosticCode::SelfLoopDemand => "self-loop demand",
            DiagnosticCode::NegativeRate => "negative rate",
            DiagnosticCode::DuplicateEdge => "duplicate demand edge",
            DiagnosticCode::NoDemand => "no positive demand",
            DiagnosticCode::NotStronglyConnected => "demand graph not strongly connected",
            DiagnosticCode::MissingDistribution => "missing value distribution",
            DiagnosticCode::InvalidDistribution => "invalid value distribution",
            DiagnosticCode::InvalidUnits => "invalid unit count",
            DiagnosticCode::InvalidTravelTime => "invalid travel time",
            DiagnosticCode::InvalidRedirectCost => "invalid redirection cost",
            DiagnosticCode::InvalidMatchingEdge => "invalid matching edge",
            DiagnosticCode::InvalidPriceGrid => "invalid price grid",
            DiagnosticCode::InvalidRequirement => "invalid multi-objective requirement",
        }
    }
}

impl Diagnostic {
    pub fn new(pointer: impl Into<String>, code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic { pointer: pointer.into(), code, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.pointer, self.code.label(), self.message)
    }
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
