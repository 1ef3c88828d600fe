use super::{AgentStats, Selector};
use crate::control::optimal_solution;
use crate::estimation::{ellipsoid_norm, DesignState, RlsEstimate};
use crate::{CostSpec, Mat, SimRng, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct OfuConfig {
    /// Projected-gradient iterations per update.
    pub iterations: usize,
    /// Finite-difference step, relative to `max(1, |theta_ij|)`.
    pub fd_step: f64,
}

impl Default for OfuConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            fd_step: 1e-5,
        }
    }
}

/// `J*(Theta)` when `Theta` is stabilizable with `J* <= D`.
fn optimal_cost(theta: &Mat, d: usize, cost: &CostSpec) -> Option<f64> {
    let sys = SystemParams::from_theta(theta, d).ok()?;
    let j = optimal_solution(&sys, cost).ok()?.cost;
    (j.is_finite() && j <= cost.cost_bound()).then_some(j)
}

/// Pulls `theta` back into `{||Theta - Theta_hat||_V <= beta}` by rescaling
/// the displacement, then into `{||Theta||_F <= S}`.
fn project(theta: Mat, center: &Mat, v: &Mat, beta: f64, s: f64) -> Mat {
    let disp = &theta - center;
    let n = ellipsoid_norm(v, &disp);
    let mut out = if n > beta { center + disp * (beta / n) } else { theta };
    let f = out.norm();
    if f > s {
        out *= s / f;
    }
    out
}

fn gradient(theta: &Mat, d: usize, cost: &CostSpec, fd_step: f64) -> Mat {
    let mut g = Mat::zeros(theta.nrows(), theta.ncols());
    let mut probe = theta.clone();
    let center = optimal_cost(theta, d, cost);
    for j in 0..theta.ncols() {
        for i in 0..theta.nrows() {
            let h = fd_step * theta[(i, j)].abs().max(1.0);
            let orig = theta[(i, j)];
            probe[(i, j)] = orig + h;
            let up = optimal_cost(&probe, d, cost);
            probe[(i, j)] = orig - h;
            let down = optimal_cost(&probe, d, cost);
            probe[(i, j)] = orig;
            g[(i, j)] = match (up, down, center) {
                (Some(u), Some(l), _) => (u - l) / (2.0 * h),
                (Some(u), None, Some(c)) => (u - c) / h,
                (None, Some(l), Some(c)) => (c - l) / h,
                _ => 0.0,
            };
        }
    }
    g
}

/// Optimistic model: approximately minimizes `J*(Theta)` over the
/// confidence ellipsoid intersected with the stabilizable set, by projected
/// natural-gradient descent with finite-difference gradients. Returns the
/// best stabilizable iterate, or `Theta_hat` if none was found.
pub fn ofulq_select(estimate: &RlsEstimate, design: &DesignState, cost: &CostSpec, cfg: &OfuConfig) -> SystemParams {
    let theta_hat = &estimate.theta_hat;
    let d = theta_hat.state_dim();
    let beta = estimate.beta;
    if !(beta > 0.0 && beta.is_finite()) {
        return theta_hat.clone();
    }
    let v = design.v();
    let Some(chol) = v.clone().cholesky() else {
        return theta_hat.clone();
    };
    let s = cost.param_bound();
    let center = theta_hat.theta();

    let start = match optimal_cost(&center, d, cost) {
        Some(j) => Some((center.clone(), j)),
        None => feasible_start(&center, v, beta, s, d, cost),
    };
    let Some((mut theta, mut j)) = start else {
        return theta_hat.clone();
    };

    let mut step = 0.5 * beta;
    for _ in 0..cfg.iterations {
        let g = gradient(&theta, d, cost, cfg.fd_step);
        let dir = chol.solve(&g);
        let dn = ellipsoid_norm(v, &dir);
        if !(dn > 0.0 && dn.is_finite()) {
            break;
        }
        let next = project(&theta - dir * (step / dn), &center, v, beta, s);
        match optimal_cost(&next, d, cost) {
            Some(jn) if jn < j => {
                theta = next;
                j = jn;
                step = (step * 1.5).min(beta);
            }
            _ => step *= 0.5,
        }
        if step < 1e-8 * beta {
            break;
        }
    }
    SystemParams::from_theta(&theta, d).unwrap_or_else(|_| theta_hat.clone())
}

/// Deterministic probes along each coordinate (in the `V` metric) for a
/// stabilizable point when the estimate itself is not.
fn feasible_start(center: &Mat, v: &Mat, beta: f64, s: f64, d: usize, cost: &CostSpec) -> Option<(Mat, f64)> {
    let mut best: Option<(Mat, f64)> = None;
    for frac in [1.0, 0.5] {
        for j in 0..center.ncols() {
            for i in 0..center.nrows() {
                for sign in [1.0, -1.0] {
                    let mut e = Mat::zeros(center.nrows(), center.ncols());
                    e[(i, j)] = 1.0;
                    let scale = frac * beta / ellipsoid_norm(v, &e);
                    let probe = project(center + e * (sign * scale), center, v, beta, s);
                    if let Some(jp) = optimal_cost(&probe, d, cost) {
                        if best.as_ref().is_none_or(|(_, jb)| jp < *jb) {
                            best = Some((probe, jp));
                        }
                    }
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct OfuSelector {
    cfg: OfuConfig,
}

impl OfuSelector {
    pub fn new(cfg: OfuConfig) -> Self {
        Self { cfg }
    }
}

impl Selector for OfuSelector {
    fn select(
        &mut self,
        estimate: &RlsEstimate,
        design: &DesignState,
        cost: &CostSpec,
        _rng: &mut SimRng,
        _stats: &mut AgentStats,
    ) -> SystemParams {
        ofulq_select(estimate, design, cost, &self.cfg)
    }
}
