use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("element is not invertible: entry {index} is zero")]
    NotInvertible { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear program did not converge after {iterations} pivots")]
    SolverNonConvergence { iterations: usize },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error(
        "closure and block criteria disagree (closure residual {closure_residual:e}, \
         {classes} coordinate classes vs dimension {dim}); input is ill-conditioned at this tolerance"
    )]
    CriteriaDisagree {
        closure_residual: f64,
        classes: usize,
        dim: usize,
    },

    #[error("rejection sampling failed after {attempts} attempts")]
    SamplingFailed { attempts: usize },

    #[error("trajectory left the simplex at t = {t} (min probability {min_prob:e})")]
    LeftSimplex {
        t: f64,
        min_prob: f64,
        last_eta: Vec<f64>,
        last_velocity: Vec<f64>,
    },

    #[error("shooting did not converge in {iterations} iterations (miss distance {miss:e})")]
    ShootingFailed { iterations: usize, miss: f64 },

    #[error("optimizer did not converge: {0}")]
    OptimizerFailed(String),

    #[error("multi-start minimizers disagree (diameter {diameter:e})")]
    ProjectionNotUnique { diameter: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}
