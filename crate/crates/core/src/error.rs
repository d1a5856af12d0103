use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tile area mismatch: |I| = 2^{spatial_scale}, |omega| = 2^{freq_scale} (product must be 1)")]
    AreaMismatch { spatial_scale: i32, freq_scale: i32 },

    #[error("frequency square sides differ: 2^{0} vs 2^{1}")]
    NotSquare(i32, i32),

    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),

    #[error("grid period must be positive and finite, got {0}")]
    BadPeriod(f64),

    #[error("grids differ: ({n_a}, {period_a}) vs ({n_b}, {period_b})")]
    GridMismatch { n_a: usize, period_a: f64, n_b: usize, period_b: f64 },

    #[error("frequency band [{lo}, {hi}) exceeds Nyquist range +/-{nyquist}: {context}")]
    Nyquist { lo: f64, hi: f64, nyquist: f64, context: String },

    #[error("spatial interval of length {len} is shorter than 4 grid spacings ({spacing}): {context}")]
    SpatialResolution { len: f64, spacing: f64, context: String },

    #[error("intervals overlap: [{0}, {1}) and [{2}, {3})")]
    Overlap(f64, f64, f64, f64),

    #[error("no h entry for frequency square {0}")]
    MissingH(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constraint on exponent weights violated: {0}")]
    WeightConstraint(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("could not place {requested} squares after {attempts} attempts (placed {placed})")]
    Placement { requested: usize, placed: usize, attempts: usize },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
