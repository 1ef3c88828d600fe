//! Experiment descriptions and their TOML config format.
//!
//! ```toml
//! env = "pendulum"            # bundled name or path to an environment file
//! algos = ["medlq", "ofulq", "tslq"]
//! scenario = "stable-init"    # or "auto-stab"
//! horizon = 2000
//! seeds = 16
//! base_seed = 0
//! workers = 0                 # 0: one per core
//! fixed_gain = [[1.0, 2.0]]   # optional gain for the `fixed` agent
//!
//! [medlq]                     # any MedLqConfig field; the rest keep defaults
//! n_candidates = 128
//! norm = "candidate"          # or "perturbation"
//!
//! [ofulq]
//! iterations = 100
//!
//! [tslq]
//! max_draws = 10000
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use medlq_core::agents::{default_epsilon, OfuConfig, TsConfig};
use medlq_core::divergence::MedNorm;
use medlq_core::{Mat, MedLqConfig};
use serde::Deserialize;

use crate::{registry, BenchError, Result};

/// Length of the stable-controller rollout that seeds the design in
/// [`Scenario::StableInit`].
pub const SEED_STEPS: usize = 50;
/// Relative perturbation of the true parameters whose optimal gain is the
/// seeding controller.
pub const SEED_GAIN_PERTURBATION: f64 = 0.1;
/// Isotropic-noise warmup steps in [`Scenario::AutoStab`] and for `stabl`/`tsac`.
pub const WARMUP_STEPS: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// A stabilizing controller is known: 50 seeding steps before the run.
    StableInit,
    /// Nothing is known: blank estimate and a 35-step noise warmup.
    AutoStab,
}

impl FromStr for Scenario {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable-init" | "stable_init" => Ok(Self::StableInit),
            "auto-stab" | "auto_stab" => Ok(Self::AutoStab),
            _ => Err(BenchError::BadSpec(format!(
                "unknown scenario `{s}` (expected stable-init or auto-stab)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::StableInit => "stable-init",
            Self::AutoStab => "auto-stab",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Bundled environment name or environment file path.
    pub env: String,
    pub algos: Vec<String>,
    pub horizon: usize,
    pub n_seeds: usize,
    pub scenario: Scenario,
    pub base_seed: u64,
    pub agent: MedLqConfig,
    pub ofu: OfuConfig,
    pub ts: TsConfig,
    /// Gain of the `fixed` agent; a detuned LQR gain when absent.
    pub fixed_gain: Option<Mat>,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl ExperimentSpec {
    /// Defaults for everything but the environment, algorithms and horizon;
    /// `epsilon` follows the horizon.
    pub fn new(env: impl Into<String>, algos: &[&str], horizon: usize) -> Self {
        Self {
            env: env.into(),
            algos: algos.iter().map(|s| s.to_string()).collect(),
            horizon,
            n_seeds: 16,
            scenario: Scenario::StableInit,
            base_seed: 0,
            agent: MedLqConfig::for_horizon(horizon),
            ofu: OfuConfig::default(),
            ts: TsConfig::default(),
            fixed_gain: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(BenchError::BadSpec("horizon must be at least 1".into()));
        }
        if self.n_seeds == 0 {
            return Err(BenchError::BadSpec("at least one seed is required".into()));
        }
        if self.algos.is_empty() {
            return Err(BenchError::BadSpec("no algorithms given".into()));
        }
        for a in &self.algos {
            registry::check_algo(a)?;
        }
        self.agent.validate()?;
        if self.ofu.iterations == 0 || !(self.ofu.fd_step > 0.0) {
            return Err(BenchError::BadSpec("ofulq needs iterations >= 1 and fd_step > 0".into()));
        }
        if self.ts.max_draws == 0 {
            return Err(BenchError::BadSpec("tslq needs max_draws >= 1".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| BenchError::BadSpec(format!("{origin}: {}", e.to_string().trim_end())))?;
        file.into_spec()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    env: Option<String>,
    algos: Option<Vec<String>>,
    scenario: Option<String>,
    horizon: Option<usize>,
    seeds: Option<usize>,
    base_seed: Option<u64>,
    workers: Option<usize>,
    fixed_gain: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    medlq: MedLqFile,
    #[serde(default)]
    ofulq: OfuFile,
    #[serde(default)]
    tslq: TsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MedLqFile {
    n_candidates: Option<usize>,
    sigma_eta: Option<f64>,
    sigma_nu: Option<f64>,
    epsilon: Option<f64>,
    lambda: Option<f64>,
    delta: Option<f64>,
    patience: Option<usize>,
    norm: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OfuFile {
    iterations: Option<usize>,
    fd_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TsFile {
    max_draws: Option<usize>,
}

impl SpecFile {
    fn into_spec(self) -> Result<ExperimentSpec> {
        let horizon = self.horizon.unwrap_or(crate::envfile::DEFAULT_HORIZON);
        let mut spec = ExperimentSpec::new(self.env.unwrap_or_else(|| "pendulum".into()), &[], horizon);
        spec.algos = self
            .algos
            .unwrap_or_else(|| ["medlq", "ofulq", "tslq"].map(String::from).to_vec());
        if let Some(s) = self.scenario {
            spec.scenario = s.parse()?;
        }
        spec.n_seeds = self.seeds.unwrap_or(spec.n_seeds);
        spec.base_seed = self.base_seed.unwrap_or(0);
        spec.workers = self.workers.unwrap_or(0);
        if let Some(rows) = self.fixed_gain {
            let ncols = rows.first().map_or(0, Vec::len);
            if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
                return Err(BenchError::BadSpec("fixed_gain must be a non-empty rectangular matrix".into()));
            }
            spec.fixed_gain = Some(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]));
        }
        let m = self.medlq;
        let cfg = &mut spec.agent;
        cfg.n_candidates = m.n_candidates.unwrap_or(cfg.n_candidates);
        cfg.sigma_eta = m.sigma_eta.unwrap_or(cfg.sigma_eta);
        cfg.sigma_nu = m.sigma_nu.unwrap_or(cfg.sigma_nu);
        cfg.epsilon = m.epsilon.unwrap_or_else(|| default_epsilon(horizon));
        cfg.lambda = m.lambda.unwrap_or(cfg.lambda);
        cfg.delta = m.delta.unwrap_or(cfg.delta);
        cfg.patience = m.patience.unwrap_or(cfg.patience);
        if let Some(norm) = m.norm {
            cfg.norm = match norm.as_str() {
                "candidate" => MedNorm::Candidate,
                "perturbation" => MedNorm::Perturbation,
                other => return Err(BenchError::BadSpec(format!("unknown medlq.norm `{other}`"))),
            };
        }
        spec.ofu.iterations = self.ofulq.iterations.unwrap_or(spec.ofu.iterations);
        spec.ofu.fd_step = self.ofulq.fd_step.unwrap_or(spec.ofu.fd_step);
        spec.ts.max_draws = self.tslq.max_draws.unwrap_or(spec.ts.max_draws);
        spec.validate()?;
        Ok(spec)
    }
}
