use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed node notation `{0}`")]
    MalformedNode(String),

    #[error("root has no predecessor")]
    RootPredecessor,

    #[error("digit {digit} out of range for arity m = {m}")]
    DigitOutOfRange { digit: u8, m: u32 },

    #[error("level {0} too deep for exact interval arithmetic")]
    LevelTooDeep(usize),

    #[error("operator arity mismatch: expected {expected} values, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("schedule has no tail rule for index {0}")]
    MissingTail(usize),

    #[error("beta = 1 at level {0} makes the ratio product undefined")]
    BetaOne(usize),

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("config violation at {path}: {message}")]
    ConfigViolation { path: String, message: String },

    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{0}")]
    OutOfDomain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("problem needs {need} node values, memory cap is {cap}")]
    MemoryCap { need: u128, cap: u128 },

    #[error("episode exceeded the step cap of {0}")]
    RunawayEpisode(u64),
}
