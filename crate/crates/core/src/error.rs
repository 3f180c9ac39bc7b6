use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("argument {value} outside the domain [{lo}, {hi}] of {what}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{0} requires an explicitly supplied comparison function G")]
    GRequired(&'static str),

    #[error("simulation diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("time step {dt} violates the {integrator} stability guard (dt <= {limit})")]
    StabilityGuard {
        integrator: &'static str,
        dt: f64,
        limit: f64,
    },

    #[error("{what} is not monotone near {at}")]
    NotMonotone { what: &'static str, at: f64 },

    #[error("quadrature failed to reach tolerance on [{a}, {b}] (estimate {estimate}, error {error})")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("fit window [{t_min}, {t_max}] holds {count} usable samples, need at least {needed}")]
    TooFewSamples {
        t_min: f64,
        t_max: f64,
        count: usize,
        needed: usize,
    },

    #[error("energy must be positive for a log-space fit, found {value} at t = {t}")]
    NonPositiveEnergy { t: f64, value: f64 },

    #[error("no decay-rate branch covers (p, q) = ({p}, {q})")]
    UncoveredBranch { p: f64, q: f64 },

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
