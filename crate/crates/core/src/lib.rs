//! Online control of unknown linear-quadratic systems with minimum empirical
//! divergence (MED-LQ).
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerical
//! code: Riccati and Lyapunov solvers, the confusing-instance search along
//! interpolation curves, regularized least-squares identification, the
//! learning agents and a single-episode simulator. File formats, the CLI and
//! multi-seed orchestration live in `medlq-bench`.
//!
//! Conventions used everywhere:
//! - a system is `x' = A x + B u + w`, `w ~ N(0, Omega)`;
//! - a gain `K` acts as `u = -K x`, so the closed loop is `A - B K`;
//! - the stacked parameter is `Theta = [A^T; B^T]`, of shape `(d + k) x d`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agents;
pub mod control;
pub mod divergence;
pub mod envs;
pub mod episode;
mod error;
pub mod estimation;
pub mod linalg;

pub use error::{Error, Result};

pub use agents::{Agent, AgentStats, MedLqConfig};
pub use control::{CostSpec, GainPolicy, PolicyEvaluation, SystemParams};
pub use divergence::{ConfusingInstanceResult, InterpolationProblem, RootMethod};
pub use envs::{Environment, StepOutcome};
pub use estimation::{DesignState, RlsEstimate};

/// Random stream used by simulators and agents. Fixed so that a seed fully
/// determines a run on every platform.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Dense real matrix.
pub type Mat = nalgebra::DMatrix<f64>;
/// Dense real vector.
pub type Vector = nalgebra::DVector<f64>;
