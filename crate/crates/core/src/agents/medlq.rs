use alloc::vec::Vec;

use rand::Rng;

use super::{AgentStats, MedLqConfig, Selector};
use crate::divergence::{self, BaseModel, RootMethod};
use crate::estimation::{DesignState, RlsEstimate};
use crate::{CostSpec, Error, Mat, SimRng, SystemParams};

/// One rank-one perturbation `W = eta e_row e_col^T` of the stacked
/// parameter and the candidate it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub row: usize,
    pub col: usize,
    pub eta: f64,
    pub theta_bar: SystemParams,
}

impl Candidate {
    /// `W` as a `(d + k) x d` matrix.
    pub fn perturbation(&self) -> Mat {
        let d = self.theta_bar.state_dim();
        let k = self.theta_bar.input_dim();
        let mut w = Mat::zeros(d + k, d);
        w[(self.row, self.col)] = self.eta;
        w
    }
}

/// `n_candidates` single-entry bumps of `theta_hat`. Per candidate the
/// stream is read in the order row, column, magnitude.
pub fn generate_candidates(theta_hat: &SystemParams, cfg: &MedLqConfig, rng: &mut SimRng) -> Vec<Candidate> {
    let d = theta_hat.state_dim();
    let rows = d + theta_hat.input_dim();
    let base = theta_hat.theta();
    (0..cfg.n_candidates)
        .map(|_| {
            let row = rng.random_range(0..rows);
            let col = rng.random_range(0..d);
            let eta = if cfg.sigma_eta > 0.0 {
                // Open interval: resample the (measure-zero) lower endpoint.
                loop {
                    let e = rng.random_range(-cfg.sigma_eta..cfg.sigma_eta);
                    if e != -cfg.sigma_eta {
                        break e;
                    }
                }
            } else {
                0.0
            };
            let mut theta = base.clone();
            theta[(row, col)] += eta;
            let theta_bar = SystemParams::from_theta(&theta, d).expect("same shape as theta_hat");
            Candidate {
                row,
                col,
                eta,
                theta_bar,
            }
        })
        .collect()
}

/// `omega_i = exp(h_i) m_i / sum_j exp(h_j) m_j`, with masked-out candidates
/// given as `None`. Returns `None` when every candidate is masked out.
pub fn softmax_weights(h: &[Option<f64>]) -> Option<Vec<f64>> {
    let max = h.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = h.iter().map(|v| v.map_or(0.0, |v| (v - max).exp())).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Some(w)
}

/// `Theta_hat + sum_i omega_i W_i`, or `Theta_hat` when no weights exist.
pub fn blend(theta_hat: &SystemParams, candidates: &[Candidate], weights: Option<&[f64]>) -> SystemParams {
    let Some(weights) = weights else {
        return theta_hat.clone();
    };
    let mut theta = theta_hat.theta();
    for (c, &w) in candidates.iter().zip(weights) {
        if w != 0.0 {
            theta[(c.row, c.col)] += w * c.eta;
        }
    }
    SystemParams::from_theta(&theta, theta_hat.state_dim()).expect("same shape as theta_hat")
}

/// Everything computed in one MED-LQ update epoch.
#[derive(Debug, Clone)]
pub struct MedLqEpoch {
    pub candidates: Vec<Candidate>,
    pub mask: Vec<bool>,
    /// MED coefficient of every masked-in candidate whose root search succeeded.
    pub coefficients: Vec<Option<f64>>,
    pub weights: Option<Vec<f64>>,
    pub theta_tilde: SystemParams,
    pub roots: Vec<Option<RootMethod>>,
}

/// Candidate generation, mask, MED coefficients and blending for one epoch.
pub fn medlq_epoch(
    theta_hat: &SystemParams,
    design: &Mat,
    cost: &CostSpec,
    cfg: &MedLqConfig,
    rng: &mut SimRng,
) -> MedLqEpoch {
    let candidates = generate_candidates(theta_hat, cfg, rng);
    let n = candidates.len();
    let mut mask = alloc::vec![false; n];
    let mut coefficients = alloc::vec![None; n];
    let mut roots = alloc::vec![None; n];
    if let Ok(base) = BaseModel::new(theta_hat.clone(), cost) {
        for (i, c) in candidates.iter().enumerate() {
            let Some(screened) = divergence::screen_candidate(&base, &c.theta_bar, cost, cfg.epsilon) else {
                continue;
            };
            mask[i] = true;
            if let Ok((h, method)) = coefficient(&base, &screened, design, cost, cfg) {
                coefficients[i] = Some(h);
                roots[i] = Some(method);
            }
        }
    }
    let weights = softmax_weights(&coefficients);
    let theta_tilde = blend(theta_hat, &candidates, weights.as_deref());
    MedLqEpoch {
        candidates,
        mask,
        coefficients,
        weights,
        theta_tilde,
        roots,
    }
}

fn coefficient(
    base: &BaseModel,
    screened: &divergence::ScreenedCandidate,
    design: &Mat,
    cost: &CostSpec,
    cfg: &MedLqConfig,
) -> Result<(f64, RootMethod), Error> {
    let problem = divergence::InterpolationProblem::with_gains(
        base.theta.clone(),
        base.solution.policy.gain().clone(),
        screened.theta_bar.clone(),
        screened.solution.policy.gain().clone(),
    )?;
    let root = divergence::confusing_instance(&problem, cost)?;
    let h = divergence::screened_coefficient_from_kl(base, screened, root.kl_cost, design, cfg.norm)?;
    Ok((h, root.method))
}

/// Model selection of MED-LQ.
#[derive(Debug, Clone)]
pub struct MedLqSelector {
    cfg: MedLqConfig,
}

impl MedLqSelector {
    pub fn new(cfg: MedLqConfig) -> Self {
        Self { cfg }
    }
}

impl Selector for MedLqSelector {
    fn select(
        &mut self,
        estimate: &RlsEstimate,
        design: &DesignState,
        cost: &CostSpec,
        rng: &mut SimRng,
        stats: &mut AgentStats,
    ) -> SystemParams {
        let epoch = medlq_epoch(&estimate.theta_hat, design.v(), cost, &self.cfg, rng);
        stats.candidates += epoch.candidates.len();
        let masked_in = epoch.mask.iter().filter(|&&m| m).count();
        stats.masked_in += masked_in;
        if epoch.weights.is_none() {
            stats.empty_epochs += 1;
        }
        for (m, r) in epoch.mask.iter().zip(&epoch.roots) {
            match (m, r) {
                (true, None) => stats.root_failures += 1,
                (_, Some(RootMethod::Taylor)) => stats.taylor_roots += 1,
                (_, Some(RootMethod::Newton)) => stats.newton_roots += 1,
                (_, Some(RootMethod::Bisection)) => stats.bisection_roots += 1,
                _ => {}
            }
        }
        epoch.theta_tilde
    }
}
