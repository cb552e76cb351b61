use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("odd number of half-edges: n*d = {0}")]
    OddHalfEdges(u64),
    #[error("vertex {0} out of range (n = {1})")]
    VertexOutOfRange(usize, usize),
    #[error("edge {0} out of range (m = {1})")]
    EdgeOutOfRange(usize, usize),
    #[error("no root t > 1 for q={q}, d={d}, beta={beta}")]
    NoRoot { q: u32, d: u32, beta: f64 },
    #[error("root residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("solvability is not monotone on the probe grid near beta={0}")]
    NonBracketing(f64),
    #[error("not supercritical: p={p} <= 1/(d-1) with d={d}")]
    Subcritical { p: f64, d: u32 },
    #[error("enumeration too large: {0} states")]
    TooLarge(f64),
    #[error("search budget of {0} states exhausted")]
    BudgetExceeded(u64),
    #[error("planted spec infeasible: {0}")]
    Infeasible(String),
    #[error("mismatched chains: {0}")]
    Mismatch(String),
    #[error("restriction violated: {0}")]
    Restriction(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
