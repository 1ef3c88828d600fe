//! Learning agents.
//!
//! MED-LQ and the two baselines share one outer loop ([`Learner`]): ingest
//! transitions, re-select a model whenever the design determinant doubles,
//! act with the optimal gain of the selected model, and add excitation noise
//! while that gain does not stabilize the selected model. They differ only in
//! the [`Selector`] that picks the model.

mod medlq;
mod ofu;
mod reference;
mod ts;
mod warmup;

pub use medlq::{
    blend, generate_candidates, medlq_epoch, softmax_weights, Candidate, MedLqEpoch, MedLqSelector,
};
pub use ofu::{ofulq_select, OfuConfig, OfuSelector};
pub use reference::FixedGainAgent;
pub use ts::{tslq_select, TsConfig, TsDraw, TsSelector};
pub use warmup::Warmup;

use alloc::string::String;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::control::{closed_loop, optimal_solution};
use crate::divergence::MedNorm;
use crate::estimation::{DesignState, RlsEstimate};
use crate::{CostSpec, Error, GainPolicy, Mat, Result, SimRng, SystemParams, Vector};

/// Hyperparameters. The shared ones (`lambda`, `delta`, `patience`,
/// `sigma_nu`) are also used by the baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct MedLqConfig {
    pub n_candidates: usize,
    /// Perturbation entries are uniform on `(-sigma_eta, sigma_eta)`.
    pub sigma_eta: f64,
    /// Standard deviation of the excitation noise.
    pub sigma_nu: f64,
    /// Membership threshold of the mask.
    pub epsilon: f64,
    pub lambda: f64,
    pub delta: f64,
    /// Minimum number of steps between two model updates.
    pub patience: usize,
    pub norm: MedNorm,
}

impl Default for MedLqConfig {
    fn default() -> Self {
        Self {
            n_candidates: 128,
            sigma_eta: 1.0,
            sigma_nu: 0.5,
            epsilon: 1e-3,
            lambda: 1e-4,
            delta: 1e-4,
            patience: 10,
            norm: MedNorm::Candidate,
        }
    }
}

impl MedLqConfig {
    /// Defaults with `epsilon = 1 / ln(T)^2`.
    pub fn for_horizon(horizon: usize) -> Self {
        Self {
            epsilon: default_epsilon(horizon),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(Error::InvalidConfig("n_candidates must be at least 1"));
        }
        if !(self.sigma_eta >= 0.0 && self.sigma_eta.is_finite()) {
            return Err(Error::InvalidConfig("sigma_eta must be non-negative"));
        }
        if !(self.sigma_nu >= 0.0 && self.sigma_nu.is_finite()) {
            return Err(Error::InvalidConfig("sigma_nu must be non-negative"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be non-negative"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig("delta must lie in (0, 1)"));
        }
        Ok(())
    }
}

pub fn default_epsilon(horizon: usize) -> f64 {
    let l = (horizon.max(3) as f64).ln();
    1.0 / (l * l)
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentStats {
    /// Model re-selections triggered by the doubling rule.
    pub updates: usize,
    /// Steps on which excitation noise was added.
    pub excitation_steps: usize,
    /// Thompson-sampling epochs that ran out of draws.
    pub ts_exhausted: usize,
    pub candidates: usize,
    pub masked_in: usize,
    /// MED-LQ epochs in which every candidate was masked out.
    pub empty_epochs: usize,
    pub taylor_roots: usize,
    pub newton_roots: usize,
    pub bisection_roots: usize,
    /// Masked-in candidates whose root search failed.
    pub root_failures: usize,
    /// Selected models without a stabilizing Riccati solution.
    pub dare_failures: usize,
}

pub trait Agent {
    fn name(&self) -> &str;
    /// Control for the current state.
    fn act(&mut self, x: &Vector, rng: &mut SimRng) -> Vector;
    /// Records the transition that followed the last action.
    fn observe(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()>;
    fn stats(&self) -> AgentStats;
}

/// Picks the model to control at an update epoch.
pub trait Selector {
    fn select(
        &mut self,
        estimate: &RlsEstimate,
        design: &DesignState,
        cost: &CostSpec,
        rng: &mut SimRng,
        stats: &mut AgentStats,
    ) -> SystemParams;
}

/// Where a learner starts: its data so far, the model it controls and the
/// gain it applies until the first update.
#[derive(Debug, Clone)]
pub struct LearnerInit {
    pub design: DesignState,
    pub theta_tilde: SystemParams,
    pub gain: Mat,
}

impl LearnerInit {
    /// No data and `Theta_hat_0 = 0`, so the initial gain is zero.
    pub fn blank(state_dim: usize, input_dim: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            design: DesignState::new(state_dim, input_dim, lambda)?,
            theta_tilde: SystemParams::zeros(state_dim, input_dim),
            gain: Mat::zeros(input_dim, state_dim),
        })
    }
}

/// The outer loop shared by all model-based learners.
#[derive(Debug, Clone)]
pub struct Learner<S> {
    name: String,
    selector: S,
    cost: CostSpec,
    cfg: MedLqConfig,
    design: DesignState,
    theta_tilde: SystemParams,
    policy: GainPolicy,
    stats: AgentStats,
}

impl<S: Selector> Learner<S> {
    pub fn new(name: impl Into<String>, selector: S, cost: CostSpec, cfg: MedLqConfig, init: LearnerInit) -> Result<Self> {
        cfg.validate()?;
        let policy = closed_loop(&init.theta_tilde, &init.gain)?;
        if init.design.state_dim() != cost.state_dim() || init.design.input_dim() != cost.input_dim() {
            return Err(Error::IncompatibleShapes("design does not match the cost"));
        }
        Ok(Self {
            name: name.into(),
            selector,
            cost,
            cfg,
            design: init.design,
            theta_tilde: init.theta_tilde,
            policy,
            stats: AgentStats::default(),
        })
    }

    pub fn design(&self) -> &DesignState {
        &self.design
    }

    pub fn theta_tilde(&self) -> &SystemParams {
        &self.theta_tilde
    }

    pub fn policy(&self) -> &GainPolicy {
        &self.policy
    }

    pub fn config(&self) -> &MedLqConfig {
        &self.cfg
    }

    /// Runs the selector if the doubling rule fires. Returns whether it did.
    pub fn maybe_update(&mut self, rng: &mut SimRng) -> bool {
        if !self.design.doubling_due(self.cfg.patience) {
            return false;
        }
        if let Ok(estimate) = self
            .design
            .rls_estimate(self.cost.sigma_w(), self.cfg.delta, self.cost.param_bound())
        {
            let theta = self
                .selector
                .select(&estimate, &self.design, &self.cost, rng, &mut self.stats);
            self.set_model(theta);
        }
        self.design.mark_update();
        self.stats.updates += 1;
        true
    }

    /// Replaces the controlled model. Its optimal gain is used when it
    /// exists; otherwise the previous gain is kept and, since it is then
    /// judged against the new model, usually triggers excitation.
    pub fn set_model(&mut self, theta: SystemParams) {
        match optimal_solution(&theta, &self.cost) {
            Ok(sol) => self.policy = sol.policy,
            Err(_) => {
                self.stats.dare_failures += 1;
                self.policy = closed_loop(&theta, self.policy.gain()).expect("gain shape is fixed");
            }
        }
        self.theta_tilde = theta;
    }

    /// `u = -K x`, plus `N(0, sigma_nu^2 I)` when `K` does not stabilize the
    /// controlled model.
    pub fn control(&mut self, x: &Vector, rng: &mut SimRng) -> Vector {
        let mut u = -(self.policy.gain() * x);
        if !self.policy.stabilizing() {
            self.stats.excitation_steps += 1;
            let s = self.cfg.sigma_nu;
            for v in u.iter_mut() {
                *v += s * rng.sample::<f64, _>(StandardNormal);
            }
        }
        u
    }
}

impl<S: Selector> Agent for Learner<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, x: &Vector, rng: &mut SimRng) -> Vector {
        self.maybe_update(rng);
        self.control(x, rng)
    }

    fn observe(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()> {
        self.design.ingest(x, u, x_next)
    }

    fn stats(&self) -> AgentStats {
        self.stats.clone()
    }
}

impl<A: Agent + ?Sized> Agent for alloc::boxed::Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn act(&mut self, x: &Vector, rng: &mut SimRng) -> Vector {
        (**self).act(x, rng)
    }

    fn observe(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()> {
        (**self).observe(x, u, x_next)
    }

    fn stats(&self) -> AgentStats {
        (**self).stats()
    }
}

pub type MedLqAgent = Learner<MedLqSelector>;
pub type OfuAgent = Learner<OfuSelector>;
pub type TsAgent = Learner<TsSelector>;

pub fn medlq_agent(cost: CostSpec, cfg: MedLqConfig, init: LearnerInit) -> Result<MedLqAgent> {
    Learner::new("medlq", MedLqSelector::new(cfg.clone()), cost, cfg, init)
}

pub fn ofu_agent(cost: CostSpec, cfg: MedLqConfig, ofu: OfuConfig, init: LearnerInit) -> Result<OfuAgent> {
    Learner::new("ofulq", OfuSelector::new(ofu), cost, cfg, init)
}

pub fn ts_agent(cost: CostSpec, cfg: MedLqConfig, ts: TsConfig, init: LearnerInit) -> Result<TsAgent> {
    Learner::new("tslq", TsSelector::new(ts), cost, cfg, init)
}
