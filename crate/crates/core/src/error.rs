//! Error type shared across the crate.

use crate::trajectory::Trajectory;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time {t} outside tabulated range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("non-finite value while evaluating {context}")]
    NonFinite { context: &'static str },

    #[error("z = {z} is within the guard band ({band:.1e}) of a zero of F1 (distance {dist:.3e})")]
    GuardBand { z: f64, dist: f64, band: f64 },

    #[error("quadrature failed to converge on [{a}, {b}]; integrand may have a non-integrable singularity")]
    Quadrature { a: f64, b: f64 },

    /// The closed-loop state left the working region. The samples recorded up
    /// to the offending step are kept so callers can still inspect the run.
    #[error("state norm exceeded {limit:.1e} at t = {t}; partial trajectory attached")]
    Divergence {
        t: f64,
        limit: f64,
        partial: Box<Trajectory>,
    },

    #[error("rotation field not differentiable along trajectory at t = {t}")]
    PhiEvaluation { t: f64 },

    #[error("degenerate study: {0}")]
    DegenerateStudy(String),

    #[error("trajectory invariant violated: {0}")]
    BadTrajectory(String),

    #[error("{0}")]
    Mismatch(String),

    #[error("empty {0}")]
    Empty(&'static str),
}
