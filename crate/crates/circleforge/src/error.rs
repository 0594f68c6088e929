use std::fmt;

/// Errors raised by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("digit {digit} is not a residue modulo {p}")]
    InvalidDigit { digit: u64, p: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("X = {x} exceeds the materialized bound {bound}")]
    BoundExceeded { x: u64, bound: u64 },

    #[error("residue {b} out of range for modulus {q}")]
    ResidueOutOfRange { b: u64, q: u64 },

    #[error("modulus {0} is not profiled")]
    UnprofiledModulus(u64),

    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("budget exceeded in {what}{}", fmt_at(.n))]
    Budget { what: String, n: Option<u64> },

    #[error("path mismatch in {what}: {detail}")]
    PathMismatch { what: String, detail: String },

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("missing measurement: {0}")]
    MissingMeasurement(String),

    #[error("local factor at p = {0} did not stabilize")]
    Unstabilized(u64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_at(n: &Option<u64>) -> String {
    match n {
        Some(n) => format!(" at n = {n}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl fmt::Display) -> Error {
    Error::InvalidInput(msg.to_string())
}
