use thiserror::Error;

/// Errors from dense linear-algebra kernels.
#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch, left is {lhs_rows}x{lhs_cols}, right has {rhs_len} entries")]
    VectorDimension {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_len: usize,
    },
    #[error("{op}: shape mismatch, {lhs_rows}x{lhs_cols} vs {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix asymmetry {max_asym:e} exceeds tolerance {tol:e}; use general_eigs for nonsymmetric input")]
    NotSymmetric { max_asym: f64, tol: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("data length {got} does not match {rows}x{cols} = {expected}")]
    BadLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix order {n} exceeds supported maximum {max}")]
    TooLarge { n: usize, max: usize },
    #[error("QR iteration did not converge within {sweeps} sweeps; {found} of {n} eigenvalues isolated")]
    NoConvergence {
        sweeps: usize,
        n: usize,
        found: usize,
        partial: Vec<(f64, f64)>,
    },
    #[error("eigenvalue sum {sum:e} disagrees with trace {trace:e} beyond tolerance")]
    TraceCheck { sum: f64, trace: f64 },
    #[error("matrix is numerically singular (sigma_min = {sigma_min:e})")]
    Singular { sigma_min: f64 },
    #[error("matrix text parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Errors from cell construction, evaluation, and differentiation.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parameter {what} = {value} outside valid range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("non-finite hidden state at step {step}")]
    NonFiniteState { step: usize },
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },
    #[error("trajectory does not match cell: {msg}")]
    TrajectoryMismatch { msg: String },
    #[error("class label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Errors from dataset parsing and task generation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("bad IDX magic {got:#010x} at byte {offset}, expected {expected:#010x}")]
    BadMagic {
        got: u32,
        expected: u32,
        offset: usize,
    },
    #[error("truncated IDX payload at byte {offset}: need {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("image is {rows}x{cols}, expected 28x28")]
    BadImageShape { rows: usize, cols: usize },
    #[error("invalid sequence mode {0:?}")]
    BadMode(String),
    #[error("pad target {t_total} shorter than sequence length {len}")]
    PadTooShort { t_total: usize, len: usize },
    #[error("label count {labels} does not match image count {images}")]
    CountMismatch { labels: usize, images: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors from experiment configuration files and overrides.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config value {key}: {msg}")]
    Invalid { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
