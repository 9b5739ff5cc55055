use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank deficient frame (smallest singular value {smallest_singular_value:e})")]
    RankDeficient { smallest_singular_value: f64 },

    #[error("integrator step size underflow at t = {t} (h = {step:e}); the system is too stiff for the explicit solver")]
    Stiffness { t: f64, step: f64 },

    #[error("frame rank collapse at t = {t} (R diagonal {diagonal:e}); reduce the truncation time or the re-orthonormalisation interval")]
    RankCollapse { t: f64, diagonal: f64 },

    #[error("asymptotic matrix is not hyperbolic: eigenvalue real part {real_part:e}")]
    NonHyperbolic { real_part: f64 },

    #[error("hyperbolicity lost in matrix sign iteration (residual {residual:e})")]
    HyperbolicityLoss { residual: f64 },

    #[error("parameter {0} is outside the family's domain")]
    OutOfDomain(String),

    #[error("unsupported operation for this family: {0}")]
    Unsupported(String),

    #[error("operation requires {expected} topology, found {found}")]
    Topology {
        expected: &'static str,
        found: &'static str,
    },

    #[error("frame field discontinuous on {} edge(s); refine the parameter grid: {}", edges.len(), format_edges(edges))]
    RefinementNeeded { edges: Vec<(usize, usize, f64)> },

    #[error("node {node} is not transversal (margin {margin:e})")]
    NonTransversal { node: usize, margin: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
    /// True for errors caused by user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation { .. }
                | Error::Format { .. }
                | Error::Topology { .. }
        )
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn format_edges(edges: &[(usize, usize, f64)]) -> String {
    edges
        .iter()
        .take(8)
        .map(|(a, b, angle)| format!("{a}-{b} ({angle:.3} rad)"))
        .collect::<Vec<_>>()
        .join(", ")
}
