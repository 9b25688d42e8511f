use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An exhaustive enumeration would exceed the configured bit budget.
    #[error("enumeration budget exceeded: {what} needs {bits} packed bits, limit is {limit}")]
    Budget {
        what: &'static str,
        bits: u32,
        limit: u32,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Some `h_n x` lies on a quantization boundary, so `sgn(Hx)` is undefined.
    #[error("degenerate channel: h_{row} x = 0 on the {part} axis for x = {x}")]
    DegenerateProjection {
        row: usize,
        part: &'static str,
        x: String,
    },

    #[error("quadrature did not reach tolerance {tol:e} within {evaluations} evaluations")]
    Quadrature { tol: f64, evaluations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
