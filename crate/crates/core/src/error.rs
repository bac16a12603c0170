use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("local index ({j},{k}) out of range for d = {d}")]
    IndexOutOfRange { j: usize, k: usize, d: usize },

    #[error("matrix is {rows}x{cols}, expected {n}x{n} with n = d*d")]
    ShapeMismatch { rows: usize, cols: usize, n: usize },

    #[error("order {n} is not the square of an integer local dimension")]
    NotASquare { n: usize },

    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("SVD did not converge within {iterations} iterations")]
    SvdNoConvergence { iterations: usize },

    #[error("permutation search exhausted without a 2-unitary hit (order {n})")]
    SearchExhausted { n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed matrix file header: {0}")]
    MalformedHeader(String),

    #[error("payload length {got} does not match n*n = {expected}")]
    PayloadLength { expected: usize, got: usize },

    #[error("butson exponent {value} out of range [0,{q}) at entry {index}")]
    ExponentRange { value: i64, q: i64, index: usize },

    #[error("malformed data table {name}: {reason}")]
    DataTable { name: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
