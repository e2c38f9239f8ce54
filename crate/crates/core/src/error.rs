use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular over GF(2)")]
    Singular,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid code configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no default CRC generator for width {0}")]
    UnsupportedCrcWidth(usize),
    #[error("missing genie (oracle-pilot) statistics")]
    MissingGenie,
}
