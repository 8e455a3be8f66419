use thiserror::Error;

/// Errors raised by the laboratory's numerical components.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown {what} `{name}`")]
    UnknownName { what: &'static str, name: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integral diverges: Re xi = {re_xi} is not below the analyticity width {lambda}")]
    Divergent { re_xi: f64, lambda: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("no spectral gap found: {0}")]
    NoGap(String),

    #[error("decay fit needs at least 3 envelope maxima in the window, found {found}")]
    TooFewMaxima { found: usize },

    #[error("requested time {t} lies beyond the history horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("initial distribution is negative (min value {min:e})")]
    NegativeDistribution { min: f64 },

    #[error("velocity cutoff too small: f0(+-{vmax}) = {value:e} exceeds {threshold:e}")]
    CutoffTooSmall { vmax: f64, value: f64, threshold: f64 },

    #[error("non-finite value in phase-space field at t = {time}")]
    NonFinite { time: f64 },

    #[error("velocity frequency {eta} outside the resolvable range +-{limit}")]
    EtaOutOfRange { eta: f64, limit: f64 },

    #[error("series diverges: {0}")]
    SeriesDivergence(String),

    #[error("field not resolved for the requested norm: {0}")]
    Unresolved(String),

    #[error("exponent overflow: {0}")]
    Overflow(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("no forward echo for k = {k}, ell = {ell}")]
    NoForwardEcho { k: i64, ell: i64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
