use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Error, Debug)]
pub enum Error {
    /// A parameter combination outside the admissible regime. The message
    /// names the violated inequality.
    #[error("regime violation: {0}")]
    Regime(String),

    /// A plain domain error (argument outside the documented range).
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid or quadrature resolution too coarse for the requested scales.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Degenerate gradient where a normalized quantity is undefined.
    #[error("degenerate gradient at (s, t) = ({s}, {t})")]
    DegenerateGradient { s: f64, t: f64 },

    /// Finite-difference step too large for the distance to the boundary plane.
    #[error("step too large: 10h = {ten_h} >= dist(x, plane) = {dist}")]
    StepTooLarge { ten_h: f64, dist: f64 },

    /// Nonlinear solve failed to reach the residual tolerance. Carries the
    /// residual history of the failed run.
    #[error("solver did not converge: final residual {final_residual:.3e} after {iterations} iterations")]
    NonConvergence {
        final_residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    /// Integer range exceeded while generating a lacunary plan.
    #[error("lacunary plan overflow at level {level}; use a smaller plan length")]
    PlanOverflow { level: usize },

    /// A scan completed without finding a qualifying value.
    #[error("not found: {0}")]
    NotFound(String),

    /// Stopping-time bookkeeping produced inconsistent family records.
    #[error("threshold logic error: {0}")]
    ThresholdLogic(String),

    /// Artifacts required by a report are missing.
    #[error("missing artifacts: {0:?}")]
    MissingArtifacts(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
