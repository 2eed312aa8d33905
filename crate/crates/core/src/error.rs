use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("integral did not converge: {0}")]
    DivergentIntegral(String),

    #[error("non-finite integrand sample at {0:?}")]
    SingularSample(Vec<f64>),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("vector field returned a non-finite tangent at t = {0}")]
    FieldEvaluation(f64),

    #[error("point {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("collocation backend failed: {0}")]
    Backend(String),

    #[error("Green's function is singular at x = y")]
    Singularity,

    #[error("expansion backend out of range: lambda * d = {0} < 1")]
    Accuracy(f64),

    #[error("configuration left the positive cone (u = {0} at a quadrature node)")]
    Positivity(f64),

    #[error("critical point {index} has the wrong class for this operation: {detail}")]
    Class { index: usize, detail: String },

    #[error("state outside every critical-point patch: {0}")]
    Region(String),

    #[error("degenerate regression data: {0}")]
    DegenerateData(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
