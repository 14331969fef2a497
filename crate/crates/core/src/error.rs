use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("undeclared identifier `{name}` at offset {pos}")]
    Undeclared { name: String, pos: usize },

    #[error("line {line}: {msg}")]
    Dsl { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot differentiate: {0}")]
    Unsupported(String),

    #[error("not polynomial in the main symbols: {0}")]
    NonPolynomial(String),

    #[error("division by an identically zero expression: {0}")]
    DivisionByZero(String),

    #[error("evaluation too close to a pole")]
    Pole,

    #[error("unbound symbol `{0}` during evaluation")]
    Unbound(String),

    #[error("derivative marker left unexpanded: {0}")]
    UnexpandedDerivative(String),

    #[error("equation not reducible to a traveling-wave ODE: {0}")]
    NotReducible(String),

    #[error("cannot integrate term `{term}`")]
    Integration { term: String },

    #[error("elimination failed: {0}")]
    Elimination(String),

    #[error("balance failed: {0}")]
    Balance(String),

    #[error("power transform failed: {0}")]
    Transform(String),

    #[error("invalid ansatz: {0}")]
    Ansatz(String),

    #[error("invalid candidate: {0}")]
    Candidate(String),

    #[error("numeric solve failed: {0}")]
    Solve(String),

    #[error("invalid branch: {0}")]
    Branch(String),

    #[error("candidate `{0}` has not passed verification")]
    Unverified(String),

    #[error("residual evaluation failed: {0}")]
    Residual(String),

    #[error("finite-difference cross-check disagrees: {0}")]
    CrossCheck(String),

    #[error("fixture error: {0}")]
    Fixture(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
