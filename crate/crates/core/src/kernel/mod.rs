//! Absorbed Markov kernels `P(x, dy) = g(x, y) ρ(dy)` on an interval or a
//! finite state set, their discretization, and numerical audits of the
//! standing hypotheses.

mod audit;
mod density;
mod grid;
mod operator;
pub mod registry;
mod spec;

pub use audit::{
    check_h1_modulus, check_h1_modulus_with, check_h2_reachability, ModulusReport, ModulusRow, ReachabilityReport, Verdict,
};
pub use density::{density, survival_mass};
pub use grid::StateGrid;
pub use operator::{
    build_operator, build_operator_with, detect_escape_set, DiscreteOperator, EscapeSet, DEFAULT_ESCAPE_TOL,
};
pub use spec::{DensityFamily, Domain, KernelSpec, Quadrature, ReferenceMeasure};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("invalid domain [{lower}, {upper}]: need finite lower < upper")]
    InvalidDomain { lower: f64, upper: f64 },
    #[error("density is negative at ({x}, {y}): {value}")]
    NegativeDensity { x: f64, y: f64, value: f64 },
    #[error("row {row} sums to {sum} > 1")]
    RowSumExceedsOne { row: usize, sum: f64 },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid_size must be at least 2, got {0}")]
    InvalidGridSize(usize),
    #[error("spec schema error: {0}")]
    Schema(String),
    #[error("all {nodes} nodes have row mass <= {tolerance}")]
    AllNodesEscape { nodes: usize, tolerance: f64 },
    #[error("{0}")]
    NotApplicable(String),
    #[error("unknown bundled spec {0:?}")]
    UnknownSpec(String),
}

impl KernelError {
    pub fn name(&self) -> &'static str {
        match self {
            KernelError::InvalidDomain { .. } => "InvalidDomain",
            KernelError::NegativeDensity { .. } => "NegativeDensity",
            KernelError::RowSumExceedsOne { .. } => "RowSumExceedsOne",
            KernelError::InvalidMatrix(_) => "InvalidMatrix",
            KernelError::InvalidParameter(_) => "InvalidParameter",
            KernelError::InvalidGridSize(_) => "InvalidGridSize",
            KernelError::Schema(_) => "SchemaError",
            KernelError::AllNodesEscape { .. } => "AllNodesEscape",
            KernelError::NotApplicable(_) => "NotApplicable",
            KernelError::UnknownSpec(_) => "UnknownSpec",
        }
    }

    /// Errors caused by the input document rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, KernelError::AllNodesEscape { .. })
    }
}
