//! Multi-seed experiment execution.

use std::time::Instant;

use medlq_core::episode::{run_episode, EpisodeTrace};
use medlq_core::{Environment, SimRng};
use rand::SeedableRng;
use rayon::prelude::*;

use crate::{envfile, registry, ExperimentSpec, Result};

/// One run of one algorithm on one seed.
#[derive(Debug, Clone)]
pub struct ExperimentTrace {
    pub env: String,
    pub algo: String,
    /// Seed index within the experiment, `0..n_seeds`.
    pub seed: u64,
    /// Optimal average cost of the true system, the regret reference.
    pub j_star: f64,
    pub trace: EpisodeTrace,
    /// Seconds, monotonic clock; excludes environment loading.
    pub wall_time: f64,
}

impl ExperimentTrace {
    pub fn destabilized(&self) -> bool {
        self.trace.destabilized()
    }

    pub fn len(&self) -> usize {
        self.trace.instant_costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce5_e9b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `stream` (0 = plant noise, 1 = agent) for run `seed`.
/// The plant stream does not depend on the algorithm, so for a given seed
/// every algorithm faces the same noise sequence.
pub fn stream_seed(base_seed: u64, seed: u64, stream: u64) -> u64 {
    mix(mix(mix(base_seed) ^ seed) ^ stream)
}

/// Runs `algo` on `env` for seed index `seed`.
pub fn run_single(spec: &ExperimentSpec, env: &Environment, algo: &str, seed: u64) -> Result<ExperimentTrace> {
    let mut env_rng = SimRng::seed_from_u64(stream_seed(spec.base_seed, seed, 0));
    let mut agent_rng = SimRng::seed_from_u64(stream_seed(spec.base_seed, seed, 1));
    let start = Instant::now();
    let mut agent = registry::build_agent(spec, env, algo, &mut agent_rng)?;
    let trace = run_episode(env, agent.as_mut(), spec.horizon, &mut env_rng, &mut agent_rng);
    Ok(ExperimentTrace {
        env: env.name().to_string(),
        algo: algo.to_string(),
        seed,
        j_star: env.optimal_cost(),
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Every `(algo, seed)` run of `spec`, sorted by `(env, algo, seed)`.
/// Specification errors surface before any run starts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentTrace>> {
    spec.validate()?;
    let env = envfile::resolve_environment(&spec.env)?;
    run_on(spec, &env)
}

/// [`run_experiment`] on an already loaded environment.
pub fn run_on(spec: &ExperimentSpec, env: &Environment) -> Result<Vec<ExperimentTrace>> {
    spec.validate()?;
    if let Some(g) = &spec.fixed_gain {
        if spec.algos.iter().any(|a| a == "fixed") {
            medlq_core::control::closed_loop(env.theta_true(), g)?;
        }
    }
    let jobs: Vec<(&str, u64)> = spec
        .algos
        .iter()
        .flat_map(|a| (0..spec.n_seeds as u64).map(move |s| (a.as_str(), s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| crate::BenchError::BadSpec(format!("worker pool: {e}")))?;
    let mut traces = pool.install(|| {
        jobs.par_iter()
            .map(|&(algo, seed)| run_single(spec, env, algo, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    traces.sort_by(|a, b| (&a.env, &a.algo, a.seed).cmp(&(&b.env, &b.algo, b.seed)));
    Ok(traces)
}
