use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: input validation problems (bad files,
/// bad expressions, invalid parameters) and numerical failures (singular
/// metrics, non-convergence, rejected closed forms). The CLI maps the first
/// family to exit code 2 and the second to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expression error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("singular metric at {point:?} (|det g| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },

    #[error("metric is not symmetric at {point:?}: g[{i}][{j}] differs from g[{j}][{i}]")]
    Asymmetric { point: Vec<f64>, i: usize, j: usize },

    #[error("metric signature at {point:?} is {found}, expected {expected}")]
    Signature {
        point: Vec<f64>,
        found: String,
        expected: String,
    },

    #[error("insufficient jet order: need {needed}, have {have}")]
    JetOrder { needed: usize, have: usize },

    #[error("geodesic left the chart domain at parameter s = {s}")]
    ChartExit { s: f64 },

    #[error("geodesic step size underflow at parameter s = {s}")]
    StepUnderflow { s: f64 },

    #[error("Newton iteration did not converge (residual {residual:e}); point outside the normal neighbourhood?")]
    NewtonFailure { residual: f64 },

    #[error("quadrature did not converge: error estimate {error:e} exceeds tolerance {tol:e}")]
    Quadrature { error: f64, tol: f64 },

    #[error("alpha = {alpha} is a pole; use the residue path")]
    Pole { alpha: Complex64 },

    #[error("closed form rejected by its validation suite: {0}")]
    ClosedFormRejected(String),

    #[error("residue paths disagree: analytic {analytic}, numeric {numeric}")]
    ResidueMismatch {
        analytic: Complex64,
        numeric: Complex64,
    },

    #[error("truncation error estimate {estimate:e} above tolerance {tol:e}")]
    Truncation { estimate: f64, tol: f64 },

    #[error("least-squares fit is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed or invalid input rather than by
    /// a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Invalid(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
