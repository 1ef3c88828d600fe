use rand::Rng;
use rand_distr::StandardNormal;

use super::{AgentStats, Selector};
use crate::control::optimal_solution;
use crate::estimation::{DesignState, RlsEstimate};
use crate::{CostSpec, Mat, SimRng, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct TsConfig {
    /// Rejection-sampling budget per update.
    pub max_draws: usize,
}

impl Default for TsConfig {
    fn default() -> Self {
        Self { max_draws: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsDraw {
    pub theta: SystemParams,
    /// No acceptable draw within the budget; `theta` is then `Theta_hat`.
    pub exhausted: bool,
    pub draws: usize,
}

fn acceptable(theta: &SystemParams, cost: &CostSpec) -> bool {
    optimal_solution(theta, cost).is_ok_and(|s| s.cost <= cost.cost_bound())
}

/// Rejection sampling from the matrix normal `Theta_hat + beta L^{-T} Z`
/// (`V = L L^T`, `Z` standard normal), i.e. row covariance `beta^2 V^{-1}`.
/// A draw is accepted when it lies in the confidence ellipsoid
/// (`||Z||_F <= 1`) and is stabilizable with `J* <= D`.
pub fn tslq_select(
    estimate: &RlsEstimate,
    design: &DesignState,
    cost: &CostSpec,
    cfg: &TsConfig,
    rng: &mut SimRng,
) -> TsDraw {
    let theta_hat = &estimate.theta_hat;
    let exhausted = || TsDraw {
        theta: theta_hat.clone(),
        exhausted: true,
        draws: cfg.max_draws,
    };
    let beta = estimate.beta;
    if beta == 0.0 {
        // Every draw would equal the estimate.
        return if acceptable(theta_hat, cost) {
            TsDraw {
                theta: theta_hat.clone(),
                exhausted: false,
                draws: 1,
            }
        } else {
            exhausted()
        };
    }
    let Some(chol) = design.v().clone().cholesky() else {
        return exhausted();
    };
    let lt = chol.l().transpose();
    let center = theta_hat.theta();
    let (rows, cols) = center.shape();
    let d = theta_hat.state_dim();
    for draw in 1..=cfg.max_draws {
        let z = Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        if z.norm() > 1.0 {
            continue;
        }
        let Some(offset) = lt.solve_upper_triangular(&z) else {
            return exhausted();
        };
        let Ok(theta) = SystemParams::from_theta(&(&center + offset * beta), d) else {
            continue;
        };
        if acceptable(&theta, cost) {
            return TsDraw {
                theta,
                exhausted: false,
                draws: draw,
            };
        }
    }
    exhausted()
}

#[derive(Debug, Clone)]
pub struct TsSelector {
    cfg: TsConfig,
}

impl TsSelector {
    pub fn new(cfg: TsConfig) -> Self {
        Self { cfg }
    }
}

impl Selector for TsSelector {
    fn select(
        &mut self,
        estimate: &RlsEstimate,
        design: &DesignState,
        cost: &CostSpec,
        rng: &mut SimRng,
        stats: &mut AgentStats,
    ) -> SystemParams {
        let draw = tslq_select(estimate, design, cost, &self.cfg, rng);
        if draw.exhausted {
            stats.ts_exhausted += 1;
        }
        draw.theta
    }
}
