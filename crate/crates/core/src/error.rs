use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field takes negative values (grid minimum {min:.6e})")]
    NegativeField { min: f64 },

    #[error("field vanishes identically")]
    ZeroField,

    #[error("principal eigenfunction is not positive (min/max ratio {ratio:.3e}); truncation order {truncation} is too small")]
    NotPositive { ratio: f64, truncation: usize },

    #[error("eigen-equation residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    TruncationError { residual: f64, tolerance: f64 },

    #[error("no unimodal bracket found: {0}")]
    BracketError(String),

    #[error("samples are not convex (second difference {second_difference:.3e} at node {index})")]
    NotConvex { index: usize, second_difference: f64 },

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("degenerate Wulff shape: {0}")]
    Degenerate(String),

    #[error("boundary point {index} of the dilated shape is not covered by any candidate half-space")]
    CoverFailure { index: usize },

    #[error("no net angle above {theta_min:.3e} certifies the inner approximation")]
    NetFailure { theta_min: f64 },

    #[error("explicit scheme unstable: dt = {dt:.3e} > dx^2/2 = {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("front reached within 5 units of the right boundary (level at {level:.3}, L = {half_width})")]
    DomainTooSmall { level: f64, half_width: f64 },

    #[error("front position is not linear in time (R^2 = {r_squared:.5})")]
    NotLinear { r_squared: f64 },

    #[error("estimator requires unthinned runs but the population cap was hit")]
    CapThinned,

    #[error("fewer than {needed} hits at every time (best: {best})")]
    TooFewHits { needed: usize, best: usize },
}
