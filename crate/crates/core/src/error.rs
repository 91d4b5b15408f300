use crate::exprpath::ExprError;
use crate::linalg::LinalgError;

/// Errors raised by model construction, operator checks and time evolution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("static PT constraints violated at t = {t}: residual {residual:.3e}")]
    ConstraintViolation { t: f64, residual: f64 },
    #[error("{quantity} vanishes at t = {t}")]
    ZeroDenominator { quantity: &'static str, t: f64 },
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("quadrature on [{a}, {b}] did not reach tolerance")]
    Quadrature { a: f64, b: f64 },
    #[error("{check} residual {residual:.3e} exceeds {tolerance:.1e} at t = {t}")]
    ResidualExceeded {
        check: &'static str,
        t: f64,
        residual: f64,
        tolerance: f64,
    },
    #[error("metric normalisation violated: det = {det:.6e}, expected 1")]
    Normalization { det: f64 },
    #[error("rho-norm drifted by {drift:.3e} at t = {t}; use a finer time grid")]
    NormDrift { t: f64, drift: f64 },
    #[error("complex instantaneous energy (Im = {im:.3e}) at t = {t}")]
    ComplexEnergy { t: f64, im: f64 },
    #[error("ambiguous level matching at t = {t}: overlaps tie")]
    LevelCrossing { t: f64 },
    #[error("gauge discontinuity at t = {t}: overlap {overlap:.3e} below threshold")]
    GaugeDiscontinuity { t: f64, overlap: f64 },
    #[error("parameter path is not closed: endpoint mismatch {mismatch:.3e}")]
    OpenPath { mismatch: f64 },
    #[error("angle undefined at t = {t}: both components vanish")]
    UndefinedAngle { t: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
