use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Accuracy { estimate: f64, error_bound: f64 },

    #[error("invalid profile: c({r}) = {value}")]
    InvalidProfile { r: f64, value: f64 },

    #[error("Herglotz condition violated at r = {r}: d/dr(r/c) = {derivative}")]
    HerglotzViolation { r: f64, derivative: f64 },

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("geodesic did not exit the ball within {steps} steps")]
    NonExit { steps: usize },

    #[error("density could not be evaluated at {at:?}")]
    Evaluation { at: Vec<f64> },

    #[error("finite-difference step underflow near r = {r}")]
    StepUnderflow { r: f64 },

    #[error("line does not meet the domain")]
    NoIntersection,

    #[error("probe failed: {0}")]
    Probe(String),

    #[error("ellipse fit failed: {0}")]
    Fit(String),

    #[error("values do not settle to a boundary limit (last increments {increments:?})")]
    NoBlowupFactorization { increments: Vec<f64> },

    #[error("invalid input: {0}")]
    Invalid(String),
}
