use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid delivery period ({tau1}, {tau2}]: need 0 <= tau1 < tau2")]
    InvalidPeriod { tau1: f64, tau2: f64 },

    #[error("delivery time {u} lies outside the period ({tau1}, {tau2}]")]
    OutsidePeriod { u: f64, tau1: f64, tau2: f64 },

    #[error("invalid weight scheme: {0}")]
    InvalidScheme(String),

    #[error("quadrature order must be at least 2, got {0}")]
    InvalidQuadrature(usize),

    #[error("integrand returned a non-finite value ({value}) at delivery node u = {node}")]
    NonFinite { node: f64, value: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("({t}, {u}) lies outside the tabulated grid")]
    OutsideGrid { t: f64, u: f64 },

    #[error("trading time {t} is after the delivery time {u}")]
    TradingAfterDelivery { t: f64, u: f64 },

    #[error("moment generating function evaluated at {r}, outside its domain r < {limit}")]
    MgfDomain { r: f64, limit: f64 },

    #[error(
        "lognormal jump sizes are not supported: their moment generating function is infinite \
         for every positive argument"
    )]
    LognormalRejected,

    #[error("raw moment of order {0} requested, supported orders are 1..=4")]
    MomentOrder(usize),

    #[error("invalid jump specification: {0}")]
    InvalidJumps(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("near-zero denominator {denominator:e} in the market price of jump risk ({context})")]
    NearZeroDenominator { denominator: f64, context: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid simulation grid: {0}")]
    InvalidGrid(String),

    #[error("density factor 1 - pi2 = {factor} is not positive at step {step}")]
    Positivity { step: usize, factor: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
