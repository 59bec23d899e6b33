use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not an element of the carrier")]
    NotInCarrier(String),

    #[error("not a lattice: {reason} ({a}, {b})")]
    NotALattice { reason: &'static str, a: String, b: String },

    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("operands live in different ambients")]
    AmbientMismatch,

    #[error("{what}: size {size} exceeds the limit of {limit}")]
    SizeLimit { what: String, size: usize, limit: usize },

    #[error("iteration cap of {cap} reached before {what} stabilized")]
    IterationCap { what: &'static str, cap: usize },

    #[error("auxiliary variable pool exhausted: {needed} fresh variable(s) needed, {available} available")]
    PoolExhausted { needed: usize, available: usize },

    #[error("duplicate clause for predicate `{0}`")]
    DuplicateClause(String),

    #[error("call to undeclared predicate `{0}`")]
    UndeclaredCall(String),

    #[error("`{pred}` expects {expected} argument(s), got {got}")]
    ArityMismatch { pred: String, expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal invariant broken: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }
}
