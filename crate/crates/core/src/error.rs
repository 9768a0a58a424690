use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),

    #[error("dimension {0} exceeds the supported maximum of 6")]
    DimensionTooLarge(usize),

    #[error("phase set {dst} is not a subset of {src}")]
    PhaseSubset { src: String, dst: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid field `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("network validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("topology size must be at least 2, got {0}")]
    TopologySize(usize),

    #[error("curvature must be positive, got a1={a1}, a2={a2}")]
    NonPositiveCurvature { a1: f64, a2: f64 },

    #[error("disk radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("invalid box bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("could not bracket the disk multiplier: {0}")]
    Bracketing(String),

    #[error("missing observation: {0}")]
    MissingObservation(String),

    #[error("constraint matrix is rank deficient ({0})")]
    RankDeficient(String),

    #[error("empty injection region at bus {bus}, phase {phase}")]
    EmptyRegion { bus: i64, phase: char },

    #[error("solver failure at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no feasible grid point")]
    NoFeasiblePoint,

    #[error("{0}")]
    Unsupported(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
