use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),

    #[error("table is not associative: ({a}{b}){c} != {a}({b}{c})")]
    NonAssociative { a: String, b: String, c: String },

    #[error("unknown semigroup element {0}")]
    UnknownElement(usize),

    #[error("feasibility kernel failed: {0}")]
    Numerical(String),

    #[error("matrix is not an involution: ||A^2 - I|| = {0:e}")]
    NotInvolutive(f64),

    #[error("matrix is not periodic with period {period}: ||D^n - I|| = {residual:e}")]
    NotPeriodic { period: usize, residual: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("body is not invariant under the action: {0}")]
    BodyNotInvariant(String),

    #[error("point is not in the required set: {0}")]
    NotInSet(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("mean is not indexed compatibly with the action: {0}")]
    IndexMismatch(String),

    #[error("iteration produced a non-finite iterate at step {iteration}")]
    Diverged { iteration: usize },
}
