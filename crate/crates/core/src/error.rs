use thiserror::Error;

/// Errors raised by the link simulator, the rate estimator and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation order {0}; expected one of 2, 4, 8, 16")]
    UnsupportedOrder(usize),

    #[error("symbol {value} is not a point of the {order}-{kind} constellation")]
    NotAConstellationPoint {
        value: f64,
        order: usize,
        kind: &'static str,
    },

    #[error("block is already differentially precoded")]
    AlreadyPrecoded,

    #[error("block is not differentially precoded")]
    NotPrecoded,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {what} (expected {expected}, got {got})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("impulse response with {taps} taps does not fit a block of {samples} samples")]
    ResponseTooLong { taps: usize, samples: usize },

    #[error("cannot scale an all-zero field sequence to a launch power")]
    ZeroPower,

    #[error("trellis budget exceeded: {required} branches required, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("brute-force enumeration of {required} sequences exceeds the limit of {limit}")]
    InstanceTooLarge { required: u64, limit: u64 },

    #[error("degenerate pilots: {0}")]
    DegeneratePilots(String),

    #[error("holdout block overlaps the pilot block")]
    HoldoutOverlap,

    #[error("empty block: {0}")]
    EmptyBlock(&'static str),

    #[error("capture file: bad magic")]
    BadMagic,

    #[error("capture file: truncated payload ({got} of {expected} bytes)")]
    TruncatedPayload { expected: u64, got: u64 },

    #[error("capture file: sample rate {sample_rate} Sa/s is below twice the symbol rate {symbol_rate} Bd")]
    RateInconsistent { sample_rate: f64, symbol_rate: f64 },

    #[error("no sync: peak normalized correlation {peak:.3} below threshold {threshold}")]
    NoSync { peak: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
