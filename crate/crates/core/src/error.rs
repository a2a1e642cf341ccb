use thiserror::Error;

/// Errors raised by the geometry kernel.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("{function} is undefined at constant term {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("jet order {requested} exceeds the available order {available}")]
    InsufficientOrder { requested: usize, available: usize },

    #[error("unsupported dimension {0} (supported: 1..=8)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("valence mismatch: {0}")]
    ValenceMismatch(String),

    #[error("metric is singular at {point:?} (|det| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },

    #[error("signature mismatch: expected ({expected_p},{expected_q}), found ({found_p},{found_q})")]
    SignatureMismatch {
        expected_p: usize,
        expected_q: usize,
        found_p: usize,
        found_q: usize,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("connection has torsion (max |Γ_ij^k - Γ_ji^k| = {0:e})")]
    Torsion(f64),

    #[error("field is not composable with non-coordinate jets: {0}")]
    NotComposable(&'static str),

    #[error("construction degenerated: {0}")]
    Degenerate(String),

    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
