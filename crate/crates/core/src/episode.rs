//! Single-run simulation and the two initialization protocols.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::agents::{Agent, AgentStats};
use crate::control::{closed_loop, optimal_solution};
use crate::estimation::DesignState;
use crate::{Environment, Mat, Result, SimRng, SystemParams};

/// A rollout is aborted once `||x||_inf` exceeds this.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Per-step record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub instant_costs: Vec<f64>,
    /// `sum_{s <= t} (c_s - J*)`.
    pub cumulative_regret: Vec<f64>,
    /// Step at which the blow-up guard fired; the trace stops there.
    pub destabilized_at: Option<usize>,
    pub stats: AgentStats,
}

impl EpisodeTrace {
    pub fn destabilized(&self) -> bool {
        self.destabilized_at.is_some()
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.cumulative_regret.last().copied()
    }
}

/// Runs `agent` on `env` for `horizon` steps from `env.x0()`. Plant noise and
/// agent randomness come from separate streams so that every algorithm sees
/// the same noise realization for a given seed.
pub fn run_episode<A: Agent + ?Sized>(
    env: &Environment,
    agent: &mut A,
    horizon: usize,
    env_rng: &mut SimRng,
    agent_rng: &mut SimRng,
) -> EpisodeTrace {
    let j_star = env.optimal_cost();
    let mut instant_costs = Vec::with_capacity(horizon);
    let mut cumulative_regret = Vec::with_capacity(horizon);
    let mut regret = 0.0;
    let mut destabilized_at = None;
    let mut x = env.x0().clone();
    for t in 0..horizon {
        let u = agent.act(&x, agent_rng);
        let out = env.step(&x, &u, env_rng);
        regret += out.cost_incurred - j_star;
        instant_costs.push(out.cost_incurred);
        cumulative_regret.push(regret);
        let blown = !out.cost_incurred.is_finite()
            || out.x_next.iter().any(|v| !(v.abs() <= BLOWUP_THRESHOLD));
        if blown || agent.observe(&x, &u, &out.x_next).is_err() {
            destabilized_at = Some(t);
            break;
        }
        x = out.x_next;
    }
    EpisodeTrace {
        instant_costs,
        cumulative_regret,
        destabilized_at,
        stats: agent.stats(),
    }
}

/// Optimal gain of a copy of the true system whose entries are perturbed by
/// independent relative factors `1 + rel * U(-1, 1)`, redrawn until the gain
/// stabilizes the true system. Falls back to the true optimal gain after 100
/// attempts.
pub fn perturbed_initial_gain(env: &Environment, rel: f64, rng: &mut SimRng) -> Mat {
    let theta = env.theta_true().theta();
    let d = env.state_dim();
    for _ in 0..100 {
        let perturbed = theta.map(|v| v * (1.0 + rel * rng.random_range(-1.0..=1.0)));
        let Ok(sys) = SystemParams::from_theta(&perturbed, d) else {
            continue;
        };
        if let Ok(sol) = optimal_solution(&sys, env.cost()) {
            let gain = sol.policy.gain().clone();
            if closed_loop(env.theta_true(), &gain).is_ok_and(|p| p.stabilizing()) {
                return gain;
            }
        }
    }
    env.optimal().policy.gain().clone()
}

/// Design state after `steps` transitions from `env.x0()` under
/// `u = -K x + dither * N(0, I)`.
pub fn seed_design(
    env: &Environment,
    gain: &Mat,
    steps: usize,
    dither: f64,
    lambda: f64,
    rng: &mut SimRng,
) -> Result<DesignState> {
    let mut design = DesignState::new(env.state_dim(), env.input_dim(), lambda)?;
    let mut x = env.x0().clone();
    for _ in 0..steps {
        let mut u = -(gain * &x);
        for v in u.iter_mut() {
            *v += dither * rng.sample::<f64, _>(StandardNormal);
        }
        let out = env.step(&x, &u, rng);
        design.ingest(&x, &u, &out.x_next)?;
        x = out.x_next;
    }
    Ok(design)
}

/// Least-squares estimate carried by a seeded design, or the zero model if
/// it cannot be formed.
pub fn design_estimate(design: &DesignState) -> SystemParams {
    let d = design.state_dim();
    design
        .v()
        .clone()
        .cholesky()
        .and_then(|c| SystemParams::from_theta(&c.solve(design.cross_sum()), d).ok())
        .unwrap_or_else(|| SystemParams::zeros(d, design.input_dim()))
}
