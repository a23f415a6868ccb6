use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("position z = {z} um coincides with the gate atom")]
    GateCoincidence { z: f64 },

    #[error("dispersion relation has a pole at omega = {omega:e} rad/s")]
    Pole { omega: f64 },

    #[error(
        "quadrature did not converge on [{lo}, {hi}] um: estimate {estimate}, \
         last relative change {change:e}"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: Complex64,
        change: f64,
    },

    #[error("quadrature failed at omega = {omega:e} rad/s: {source}")]
    SpectralComponent {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no sign change of |phi| - pi on [{lo}, {hi}]: endpoint values {f_lo} and {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error(
        "time window too short: {fraction:e} of the energy at z = {z} um sits in the outer 5% of \
         the window; increase the span"
    )]
    Aliasing { z: f64, fraction: f64 },

    #[error("cannot parse quantity `{input}`: {reason}")]
    Quantity { input: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("golden file `{0}` is missing; run `rydberg-qubit bless <dir>` first")]
    MissingGolden(String),

    #[error("regression check failed: {0}")]
    Regression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in JSON error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParam { .. } => "invalid_param",
            Error::GateCoincidence { .. } => "gate_coincidence",
            Error::Pole { .. } => "pole",
            Error::Quadrature { .. } | Error::SpectralComponent { .. } => "quadrature",
            Error::Bracket { .. } => "bracket",
            Error::Aliasing { .. } => "aliasing",
            Error::Quantity { .. } => "quantity",
            Error::Config(_) => "config",
            Error::MissingGolden(_) => "missing_golden",
            Error::Regression(_) => "regression",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code: 1 for physics/numeric failures, 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam { .. }
            | Error::Quantity { .. }
            | Error::Config(_)
            | Error::MissingGolden(_) => 2,
            _ => 1,
        }
    }
}
