use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("potential has no double well (beta = {beta}, phi_ext = {phi_ext})")]
    NoDoubleWell { beta: f64, phi_ext: f64 },

    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("basis of {n_basis} states is not converged: the lowest levels keep weight {tail:.2e} in its top quarter; raise basis.n_basis")]
    BasisUnconverged { n_basis: usize, tail: f64 },

    #[error("qubit doublet poorly isolated: (E3-E2)/(E2-E1) = {isolation:.3} < {required}")]
    PoorIsolation { isolation: f64, required: f64 },

    #[error("no mass in the scan range gives isolation >= {isolation_min} with V_x in [{vx_min}, {vx_max}]")]
    CalibrationFailed {
        isolation_min: f64,
        vx_min: f64,
        vx_max: f64,
    },

    #[error("trace too short: {len} steps, need at least {required}")]
    TooShort { len: usize, required: usize },

    #[error("noise trace dt = {trace_dt} does not match propagator dt = {cache_dt}")]
    StepMismatch { trace_dt: f64, cache_dt: f64 },

    #[error("noise value {value} has no cached propagator")]
    UnknownNoiseLevel { value: f64 },

    #[error("overdamped: v_x = {v_x} <= d/2 = {}", d / 2.0)]
    Overdamped { v_x: f64, d: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    FitDiverged { iterations: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("too few oscillations: found {extrema} extrema, need at least 4")]
    TooFewOscillations { extrema: usize },

    #[error("{0}")]
    Usage(String),

    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for usage/config/IO problems, 2 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Usage(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 1,
            _ => 2,
        }
    }
}
