use thiserror::Error;

use crate::divergence::PathSide;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("incompatible shapes: {0}")]
    IncompatibleShapes(&'static str),
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("dare_diverged: Riccati iteration did not converge")]
    DareDiverged,
    #[error("unstable_closed_loop: spectral radius {0} >= 1")]
    UnstableClosedLoop(f64),
    /// A cost evaluation along an interpolation curve met an unstable loop.
    #[error("unstable_closed_loop along interpolation path ({0:?} gain)")]
    UnstableAlongPath(PathSide),
    #[error("alpha_out_of_range: {0}")]
    AlphaOutOfRange(f64),
    #[error("no_sign_change: L(0) = {l0}, L(1) = {l1}")]
    NoSignChange { l0: f64, l1: f64 },
    #[error("interpolation_unstable: every probe in [{lo}, {hi}] is unstable")]
    InterpolationUnstable { lo: f64, hi: f64 },
    #[error("singular_design: design matrix is not positive definite")]
    SingularDesign,
    #[error("nonfinite_observation")]
    NonfiniteObservation,
    #[error("bad_env_param: {0}")]
    BadEnvParam(&'static str),
    #[error("not_stabilizable")]
    NotStabilizable,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
