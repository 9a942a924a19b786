use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid order {0}: must be positive and finite")]
    InvalidOrder(f64),
    #[error("order {value} out of range for {what}")]
    OrderOutOfRange { what: &'static str, value: f64 },
    #[error("gamma pole at non-positive integer {0}")]
    GammaPole(f64),
    #[error("gamma overflow at {0}")]
    GammaOverflow(f64),
    #[error("point {x} outside the domain of {what}")]
    Domain { what: &'static str, x: f64 },
    #[error("invalid interval ({a}, {b})")]
    InvalidInterval { a: f64, b: f64 },
    #[error("infinite interval needs a finite truncation window")]
    InfiniteInterval,
    #[error("grid needs at least 3 nodes, got {0}")]
    InvalidCount(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite sample {value} at node x = {x}")]
    NonFiniteSample { x: f64, value: f64 },
    #[error("length mismatch: {nodes} nodes, {values} values")]
    LengthMismatch { nodes: usize, values: usize },
    #[error("quadrature did not converge: estimated error {achieved:e} after {intervals} intervals")]
    NonConvergence { achieved: f64, intervals: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("cutoff is not identically 1 on the support: psi({x}) = {value}")]
    CutoffMismatch { x: f64, value: f64 },
    #[error("insufficient decay at window edge: |phi| = {0:e}")]
    InsufficientDecay(f64),
    #[error("partition sum did not settle: partial sums {0:?}")]
    NonConvergentSum(Vec<f64>),
    #[error("phi(f)/f is singular at x = {0} and phi'(0) was not supplied")]
    RatioSingularity(f64),
    #[error("kernel singularity exponent {0} is not integrable")]
    NonIntegrableKernel(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
