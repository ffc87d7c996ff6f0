use thiserror::Error;

/// Errors raised by the library.
///
/// Solver outcomes that are part of normal operation (parity failures, exhausted
/// retries) are carried in [`crate::solver::SolveStatus`] instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("linear space is rank deficient (sigma_min / sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("gauss-jordan elimination broke down (pivot ratio {pivot_ratio:.3e})")]
    EliminationFailed { pivot_ratio: f64 },

    #[error("QR iteration did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("cubic pencil det(sA + tB) vanishes identically")]
    DegeneratePencil,

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("point lies on the line at infinity of the affine chart (|u3| = {0:.3e})")]
    ChartSingularity(f64),

    #[error("invalid box [{a}, {b}] x [{c}, {d}]")]
    InvalidBox { a: f64, b: f64, c: f64, d: f64 },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error(
        "cross-check failed: solver mean {solver_mean:.5} +- {solver_ci:.5}, \
         determinant mean {det_mean:.5} +- {det_ci:.5}"
    )]
    CrossCheckFailed {
        solver_mean: f64,
        solver_ci: f64,
        det_mean: f64,
        det_ci: f64,
    },

    #[error("check `{check}` failed: worst deviation {worst:.3e}")]
    AssertionFailure { check: String, worst: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
