use alloc::boxed::Box;
use alloc::string::String;

use crate::solver::DirichletSolution;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("length mismatch: expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("expression evaluated to a non-finite value at node {node}")]
    NonFiniteEvaluation { node: usize },
    /// A theorem hypothesis or named inequality does not hold.
    #[error("{hypothesis} violated: {detail}")]
    Hypothesis { hypothesis: String, detail: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ordering violated at node {node}: lower > upper")]
    Ordering { node: usize },
    #[error("nonlocal coefficient is not positive: A(x, {t}) = {value} at node {node}")]
    NonPositiveCoefficient { node: usize, t: f64, value: f64 },
    #[error("Dirichlet solver did not converge after {} iterations (residual {:.3e})", .0.iterations, .0.final_residual)]
    NotConverged(Box<DirichletSolution>),
    #[error("linear system is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("parameter search exhausted: {0}")]
    SearchExhausted(String),
}

impl Error {
    pub(crate) fn hypothesis(name: &str, detail: String) -> Self {
        Error::Hypothesis {
            hypothesis: String::from(name),
            detail,
        }
    }
}
