use std::path::PathBuf;

use thiserror::Error;

/// Which structural hypothesis a coefficient sample broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    Asymmetric,
    NotElliptic,
    NegativePotential,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Asymmetric => write!(f, "a_jk != a_kj"),
            Violation::NotElliptic => write!(f, "ellipticity violated"),
            Violation::NegativePotential => write!(f, "c(x) < 0"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid coefficient parameters: {0}")]
    InvalidParams(String),

    #[error("{violation} at node {node} (x = {position:?}): value {value:e}")]
    FieldViolation {
        violation: Violation,
        node: usize,
        position: Vec<f64>,
        value: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator has {dofs} degrees of freedom, above the dense cap of {cap}; reduce N")]
    TooLarge { dofs: usize, cap: usize },

    #[error("operator is not nonnegative: smallest eigenvalue {min:e} vs largest {max:e}")]
    NotNonnegative { min: f64, max: f64 },

    #[error("scalar map {map} is singular at eigenvalue {eigenvalue:e}")]
    Singular { map: String, eigenvalue: f64 },

    #[error("scalar map {map} is complex-valued; use the complex apply")]
    ComplexMap { map: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("the operator carries no grid; this operation needs node coordinates")]
    MissingGrid,

    #[error("t-quadrature did not converge for {} (lambda, y) pairs; worst relative change {worst:e} at lambda={lambda:e}, y={y:e}", .count)]
    QuadratureNotConverged {
        count: usize,
        worst: f64,
        lambda: f64,
        y: f64,
    },

    #[error("y -> 0 extrapolation diverged: estimates differ by {discrepancy:e} (relative)")]
    ExtrapolationDiverged { discrepancy: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("Picard iteration did not converge in {} iterations; residuals {history:?}", .history.len())]
    PicardNotConverged { history: Vec<f64> },

    #[error("inner step iteration did not converge at t = {time}")]
    StepNotConverged { time: f64 },

    #[error("blow-up at t = {time}: H^s norm {norm:e} exceeds envelope {envelope:e}")]
    BlowUp { time: f64, norm: f64, envelope: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid vanishing spec: {0}")]
    InvalidSpec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for everything
    /// that went wrong while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidGrid(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
