use thiserror::Error;

#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell}: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("mesh file line {line}: {reason}")]
    MeshFormat { line: usize, reason: String },

    #[error("cell {cell} is not star-shaped (empty kernel)")]
    NotStarShaped { cell: usize },

    #[error("quadrature exact to degree {have} but degree {need} is required")]
    QuadratureDegree { need: usize, have: usize },

    #[error("cell {cell}: singular {what} (reciprocal condition {rcond:.3e})")]
    SingularLocal { cell: usize, what: &'static str, rcond: f64 },

    #[error("cell {cell}: no ell <= {ell_max} passes the coercivity probe; lambda2/lambda_max trace {trace:?}")]
    ProbeFailed {
        cell: usize,
        ell_max: usize,
        trace: Vec<f64>,
    },

    #[error("cell {cell}: non-finite entry in local system")]
    NonFinite { cell: usize },

    #[error("boundary edge {edge} of cell {cell} has no Dirichlet label")]
    UnlabeledBoundary { cell: usize, edge: usize },

    #[error("linear solve failed: {reason} (relative residual {residual:.3e})")]
    Solver { reason: String, residual: f64 },

    #[error("error norm undefined: {0}")]
    UndefinedNorm(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;
