use thiserror::Error;

/// Errors produced by the modelling toolkit.
///
/// Messages are prefixed with the module that raised them so the CLI can
/// surface them verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid parameter: {msg}")]
    Parameter { module: &'static str, msg: String },

    #[error("{module}: validation failed: {msg}")]
    Validation { module: &'static str, msg: String },

    #[error("{module}: singular parameters: {msg}")]
    Singular { module: &'static str, msg: String },

    #[error("materials: unknown material '{0}'")]
    NotFound(String),

    #[error("biot: physically invalid medium: {0}")]
    PhysicallyInvalid(String),

    #[error("bubbly: no resonance: {0}")]
    NoResonance(String),

    #[error("microsim: geometry infeasible: {0}")]
    GeometryInfeasible(String),

    #[error("microsim: CFL condition violated: dt = {dt:e} s exceeds limit {limit:e} s")]
    Cfl { dt: f64, limit: f64 },

    #[error("microsim: numerical instability detected at step {step}")]
    Instability { step: usize },

    #[error("waveform: no arrival above threshold: {0}")]
    NoArrival(String),

    #[error("waveform: undefined delay: {0}")]
    UndefinedDelay(String),

    #[error("waveform: undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("cellmodel: infeasible porosity: {0}")]
    InfeasiblePorosity(String),

    #[error("cellmodel: indeterminate equilibrium: {0}")]
    Indeterminate(String),

    #[error("{module}: configuration error: {msg}")]
    Config { module: &'static str, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(module: &'static str, msg: impl Into<String>) -> Error {
    Error::Parameter {
        module,
        msg: msg.into(),
    }
}

pub(crate) fn validation(module: &'static str, msg: impl Into<String>) -> Error {
    Error::Validation {
        module,
        msg: msg.into(),
    }
}

pub(crate) fn config(module: &'static str, msg: impl Into<String>) -> Error {
    Error::Config {
        module,
        msg: msg.into(),
    }
}
