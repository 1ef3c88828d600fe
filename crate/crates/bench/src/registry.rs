//! Agents by name and the two initialization protocols.

use medlq_core::agents::{
    medlq_agent, ofu_agent, ts_agent, FixedGainAgent, LearnerInit, Warmup,
};
use medlq_core::control::{closed_loop, optimal_gain};
use medlq_core::episode::{design_estimate, perturbed_initial_gain, seed_design};
use medlq_core::{Agent, CostSpec, Environment, Mat, SimRng};

use crate::spec::{ExperimentSpec, Scenario, SEED_GAIN_PERTURBATION, SEED_STEPS, WARMUP_STEPS};
use crate::{BenchError, Result};

pub const ALGOS: &[&str] = &["medlq", "ofulq", "tslq", "stabl", "tsac", "optimal", "fixed"];

/// Scaling of `R` behind the default `fixed` gain.
pub const FIXED_R_SCALE: f64 = 100.0;

pub fn check_algo(name: &str) -> Result<()> {
    if ALGOS.contains(&name) {
        Ok(())
    } else {
        Err(BenchError::UnknownAlgo(name.to_string()))
    }
}

/// Default gain of the `fixed` agent: the LQR gain of the true system under
/// an input penalty `FIXED_R_SCALE` times larger. It always stabilizes the
/// true system and is deliberately sluggish.
pub fn fixed_baseline_gain(env: &Environment) -> Result<Mat> {
    let c = env.cost();
    let detuned = CostSpec::new(c.q().clone(), c.r() * FIXED_R_SCALE, c.sigma_w())?.with_omega(c.omega().clone())?;
    Ok(optimal_gain(env.theta_true(), &detuned)?.gain().clone())
}

/// Initial state of a learner under `scenario`. Stable-init rolls out the
/// seeding controller, drawing from `rng`.
pub fn learner_init(spec: &ExperimentSpec, env: &Environment, scenario: Scenario, rng: &mut SimRng) -> Result<LearnerInit> {
    let cfg = &spec.agent;
    match scenario {
        Scenario::StableInit => {
            let gain = perturbed_initial_gain(env, SEED_GAIN_PERTURBATION, rng);
            let design = seed_design(env, &gain, SEED_STEPS, cfg.sigma_nu, cfg.lambda, rng)?;
            Ok(LearnerInit {
                theta_tilde: design_estimate(&design),
                design,
                gain,
            })
        }
        Scenario::AutoStab => Ok(LearnerInit::blank(env.state_dim(), env.input_dim(), cfg.lambda)?),
    }
}

fn learner(spec: &ExperimentSpec, env: &Environment, base: &str, init: LearnerInit) -> Result<Box<dyn Agent>> {
    let cost = env.cost().clone();
    let cfg = spec.agent.clone();
    Ok(match base {
        "medlq" => Box::new(medlq_agent(cost, cfg, init)?),
        "ofulq" => Box::new(ofu_agent(cost, cfg, spec.ofu.clone(), init)?),
        "tslq" => Box::new(ts_agent(cost, cfg, spec.ts.clone(), init)?),
        other => return Err(BenchError::UnknownAlgo(other.to_string())),
    })
}

/// Builds agent `algo` for one run. Any randomness used before the run
/// (seeding rollouts) comes from `rng`.
pub fn build_agent(spec: &ExperimentSpec, env: &Environment, algo: &str, rng: &mut SimRng) -> Result<Box<dyn Agent>> {
    check_algo(algo)?;
    let k = env.input_dim();
    Ok(match algo {
        "optimal" => Box::new(FixedGainAgent::new("optimal", env.optimal().policy.gain().clone())),
        "fixed" => {
            let gain = match &spec.fixed_gain {
                Some(g) => {
                    closed_loop(env.theta_true(), g)?;
                    g.clone()
                }
                None => fixed_baseline_gain(env)?,
            };
            Box::new(FixedGainAgent::new("fixed", gain))
        }
        // The auto-stabilizing baselines always start blank behind a warmup.
        "stabl" | "tsac" => {
            let base = if algo == "stabl" { "ofulq" } else { "tslq" };
            let init = learner_init(spec, env, Scenario::AutoStab, rng)?;
            Box::new(Warmup::new(learner(spec, env, base, init)?, algo, WARMUP_STEPS, k))
        }
        base => {
            let init = learner_init(spec, env, spec.scenario, rng)?;
            let inner = learner(spec, env, base, init)?;
            match spec.scenario {
                Scenario::StableInit => inner,
                Scenario::AutoStab => Box::new(Warmup::new(inner, base, WARMUP_STEPS, k)),
            }
        }
    })
}
