use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order {order} exceeds the supported cap {cap}")]
    UnsupportedOrder { order: usize, cap: usize },

    #[error("invalid spherical harmonic order m={m} for degree l={l}")]
    InvalidHarmonicOrder { l: usize, m: i64 },

    #[error("spectrum of {n_sim} modes requires angular order {needed}, above the cap {cap}")]
    Capacity { n_sim: usize, needed: usize, cap: usize },

    #[error("point at radius {radius} lies outside the closed domain of radius {domain_radius}")]
    OutsideDomain { radius: f64, domain_radius: f64 },

    #[error("point at radius {radius} is not on the boundary of radius {domain_radius}")]
    NotOnBoundary { radius: f64, domain_radius: f64 },

    #[error("gamma {gamma} resonates with mode {n} (mu = {mu})")]
    Resonance { n: usize, gamma: f64, mu: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sum of B_i is numerically singular (condition number {condition:e}); try larger or different gammas")]
    SingularSynthesis { condition: f64 },

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("eigensolver did not converge")]
    Eigensolver,

    #[error("no gain scaling up to 2^10 reaches margin {target}; margins tried: {margins:?}")]
    AutoScaleFailed { target: f64, margins: Vec<f64> },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("nonpositive value {value} at t = {t} inside the fit window")]
    NonPositive { t: f64, value: f64 },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("insufficient excitation: {0}")]
    InsufficientExcitation(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
