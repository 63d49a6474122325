use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state vector has zero norm")]
    ZeroNorm,

    #[error("matrix is not Hermitian (max |ρ - ρ†| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0} (expected 1)")]
    TraceNotUnit(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("fidelity has imaginary part {0:e}; state is corrupted")]
    ComplexFidelity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix exponential did not converge (non-finite entries for t = {0} µs)")]
    ExpNotConverged(f64),

    #[error("no stationary state found: residual ‖Wρ‖ = {0:e}")]
    NoStationaryState(f64),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("need at least {needed} data points for {params} free parameters, got {got}")]
    InsufficientData {
        needed: usize,
        params: usize,
        got: usize,
    },

    #[error("normal matrix is singular")]
    SingularNormalMatrix,

    #[error("optimizer exhausted {0} iterations without converging")]
    IterationBudget(usize),

    #[error("sampler did not converge: max split-R̂ = {max_rhat:.4} on `{coordinate}`")]
    NotConverged { max_rhat: f64, coordinate: String },

    #[error("bright and dark readout levels must differ (I_bright = {bright}, I_dark = {dark})")]
    DegenerateReadout { bright: f64, dark: f64 },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
