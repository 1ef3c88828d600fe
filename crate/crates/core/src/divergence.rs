//! Confusing-instance search for LQ systems.
//!
//! Given an estimate `Theta` with optimal gain `K` and an alternative
//! `Theta'` with optimal gain `K'`, the search walks the segment
//! `Theta(alpha) = Theta + alpha (Theta' - Theta)` for the point where both
//! gains cost the same, `L(alpha) = J_{K'}(Theta(alpha)) - J_K(Theta(alpha)) = 0`.
//! The log-likelihood rate from `Theta` to that point bounds the information
//! needed to rule the alternative out.
//!
//! Closed-loop perturbation convention: with `u = -K x` the interpolated
//! loop is `A_K(alpha) = A_K + alpha * Delta_K`, `Delta_K = Delta_A - Delta_B K`.
//! With that convention `P_bar` below is exactly `dP_K/dalpha` at zero, so the
//! quadratic model is `p + alpha p_bar + alpha^2 p_dbar`.


use crate::control::{self, optimal_solution, policy_cost, OptimalSolution};
use crate::linalg::{self, min_sym_eigenvalue};
use crate::{CostSpec, Error, Mat, Result, SystemParams};

/// Floor applied to the divergence of a candidate that passed the mask.
pub const MIN_KL_COST: f64 = 1e-12;
/// Eigenvalue floor for the positive semi-definiteness tests in the mask.
pub const PSD_FLOOR: f64 = -1e-10;
/// Step of the central difference used for Newton derivatives.
pub const NEWTON_FD_STEP: f64 = 1e-6;
/// A Taylor root is kept only if `|L(alpha)| <= TAYLOR_ACCEPT * |L(0)|`.
pub const TAYLOR_ACCEPT: f64 = 1e-3;

const MAX_ROOT_ITER: usize = 100;

/// Which gain of an interpolation problem failed to stabilize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathSide {
    /// `K`, optimal for the base system.
    Base,
    /// `K'`, optimal for the alternative.
    Alternative,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    Taylor,
    Newton,
    Bisection,
}

/// The segment between two systems and their optimal gains.
#[derive(Debug, Clone)]
pub struct InterpolationProblem {
    theta: SystemParams,
    theta_prime: SystemParams,
    gain: Mat,
    gain_prime: Mat,
    delta_a: Mat,
    delta_b: Mat,
}

impl InterpolationProblem {
    /// Solves both Riccati equations to obtain `K` and `K'`.
    pub fn new(theta: SystemParams, theta_prime: SystemParams, cost: &CostSpec) -> Result<Self> {
        let gain = control::optimal_gain(&theta, cost)?.gain().clone();
        let gain_prime = control::optimal_gain(&theta_prime, cost)?.gain().clone();
        Self::with_gains(theta, gain, theta_prime, gain_prime)
    }

    /// Uses gains computed elsewhere.
    pub fn with_gains(theta: SystemParams, gain: Mat, theta_prime: SystemParams, gain_prime: Mat) -> Result<Self> {
        if theta.a().shape() != theta_prime.a().shape() || theta.b().shape() != theta_prime.b().shape() {
            return Err(Error::IncompatibleShapes("endpoint systems differ in size"));
        }
        let gain_shape = (theta.input_dim(), theta.state_dim());
        if gain.shape() != gain_shape || gain_prime.shape() != gain_shape {
            return Err(Error::IncompatibleShapes("gain must be k x d"));
        }
        let delta_a = theta_prime.a() - theta.a();
        let delta_b = theta_prime.b() - theta.b();
        Ok(Self {
            theta,
            theta_prime,
            gain,
            gain_prime,
            delta_a,
            delta_b,
        })
    }

    pub fn theta(&self) -> &SystemParams {
        &self.theta
    }

    pub fn theta_prime(&self) -> &SystemParams {
        &self.theta_prime
    }

    pub fn gain(&self) -> &Mat {
        &self.gain
    }

    pub fn gain_prime(&self) -> &Mat {
        &self.gain_prime
    }

    pub fn delta_a(&self) -> &Mat {
        &self.delta_a
    }

    pub fn delta_b(&self) -> &Mat {
        &self.delta_b
    }

    /// `Delta_A - Delta_B K`: the derivative of `A(alpha) - B(alpha) K`.
    pub fn closed_loop_delta(&self, gain: &Mat) -> Mat {
        &self.delta_a - &self.delta_b * gain
    }

    // No range check; finite differences step slightly outside [0, 1].
    fn point(&self, alpha: f64) -> SystemParams {
        let a = self.theta.a() + &self.delta_a * alpha;
        let b = self.theta.b() + &self.delta_b * alpha;
        SystemParams::new(a, b).expect("interpolated system keeps its shape")
    }
}

/// Outcome of the refined confusing-instance search.
#[derive(Debug, Clone)]
pub struct ConfusingInstanceResult {
    pub alpha_star: f64,
    pub theta_tilde: SystemParams,
    /// `d_K(Theta || Theta(alpha*))`, the refined upper bound on the
    /// divergence to the closest alternative on the segment.
    pub kl_cost: f64,
    pub method: RootMethod,
    /// `|L(alpha*)|`.
    pub residual: f64,
    /// Cost-gap evaluations spent in the root search (derivative probes excluded).
    pub iterations: usize,
}

/// Per-step expected log-likelihood ratio of trajectories under `K` when the
/// data come from `theta` and are scored against `theta_tilde`:
/// `1/2 Tr((A_K - A~_K)^T Omega^{-1} (A_K - A~_K) Sigma_K(theta))`.
pub fn llr_rate(theta: &SystemParams, theta_tilde: &SystemParams, gain: &Mat, omega: &Mat) -> Result<f64> {
    let a_k = theta.closed_loop_matrix(gain)?;
    if omega.shape() != a_k.shape() {
        return Err(Error::IncompatibleShapes("systems and Omega must share the state dimension"));
    }
    let sigma = control::solve_lyapunov_bellman(&a_k.transpose(), omega)?;
    llr_rate_given_covariance(theta, theta_tilde, gain, omega, &sigma)
}

/// The same trace form with the state covariance supplied by the caller.
/// Linear in `Omega^{-1}` for fixed `sigma`; note that `llr_rate` itself is
/// invariant to scaling `Omega`, because the stationary covariance scales
/// along with it.
pub fn llr_rate_given_covariance(
    theta: &SystemParams,
    theta_tilde: &SystemParams,
    gain: &Mat,
    omega: &Mat,
    sigma: &Mat,
) -> Result<f64> {
    let a_k = theta.closed_loop_matrix(gain)?;
    let a_tilde = theta_tilde.closed_loop_matrix(gain)?;
    if a_k.shape() != a_tilde.shape() || omega.shape() != a_k.shape() || sigma.shape() != a_k.shape() {
        return Err(Error::IncompatibleShapes("systems, Omega and Sigma must share the state dimension"));
    }
    let diff = a_k - a_tilde;
    let omega_chol = omega.clone().cholesky().ok_or(Error::NotPositiveDefinite("Omega"))?;
    let weighted = omega_chol.solve(&diff);
    let rate = 0.5 * (diff.transpose() * weighted * sigma).trace();
    Ok(rate.max(0.0))
}

pub fn interpolate(problem: &InterpolationProblem, alpha: f64) -> Result<SystemParams> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if alpha == 0.0 {
        return Ok(problem.theta.clone());
    }
    if alpha == 1.0 {
        return Ok(problem.theta_prime.clone());
    }
    Ok(problem.point(alpha))
}

fn gap_at(problem: &InterpolationProblem, alpha: f64, cost: &CostSpec) -> Result<f64> {
    let sys = if alpha == 0.0 {
        problem.theta.clone()
    } else if alpha == 1.0 {
        problem.theta_prime.clone()
    } else {
        problem.point(alpha)
    };
    let base = policy_cost(&sys, &problem.gain, cost);
    let alt = policy_cost(&sys, &problem.gain_prime, cost);
    match (base, alt) {
        (Ok(base), Ok(alt)) => Ok(alt.j - base.j),
        (Err(Error::UnstableClosedLoop(_)), Err(Error::UnstableClosedLoop(_))) => {
            Err(Error::UnstableAlongPath(PathSide::Both))
        }
        (Err(Error::UnstableClosedLoop(_)), Ok(_)) => Err(Error::UnstableAlongPath(PathSide::Base)),
        (Ok(_), Err(Error::UnstableClosedLoop(_))) => Err(Error::UnstableAlongPath(PathSide::Alternative)),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// `L(alpha) = J_{K'}(Theta(alpha)) - J_K(Theta(alpha))`.
pub fn cost_gap(problem: &InterpolationProblem, alpha: f64, cost: &CostSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    gap_at(problem, alpha, cost)
}

/// `L` with infinite costs mapped to signed infinities: an unstable `K'`
/// makes the gap `+inf`, an unstable `K` makes it `-inf`.
fn signed_gap(problem: &InterpolationProblem, alpha: f64, cost: &CostSpec) -> Result<Option<f64>> {
    match gap_at(problem, alpha, cost) {
        Ok(v) => Ok(Some(v)),
        Err(Error::UnstableAlongPath(PathSide::Alternative)) => Ok(Some(f64::INFINITY)),
        Err(Error::UnstableAlongPath(PathSide::Base)) => Ok(Some(f64::NEG_INFINITY)),
        Err(Error::UnstableAlongPath(PathSide::Both)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn gap_derivative(problem: &InterpolationProblem, alpha: f64, value: f64, cost: &CostSpec) -> Option<f64> {
    let h = NEWTON_FD_STEP;
    let (lo, hi) = ((alpha - h).max(0.0), (alpha + h).min(1.0));
    let f_hi = if hi == alpha { value } else { gap_at(problem, hi, cost).ok()? };
    let f_lo = if lo == alpha { value } else { gap_at(problem, lo, cost).ok()? };
    let slope = (f_hi - f_lo) / (hi - lo);
    (slope.is_finite() && slope != 0.0).then_some(slope)
}

fn finish(
    problem: &InterpolationProblem,
    cost: &CostSpec,
    alpha: f64,
    value: f64,
    method: RootMethod,
    iterations: usize,
) -> Result<ConfusingInstanceResult> {
    let theta_tilde = problem.point(alpha);
    let kl_cost = llr_rate(&problem.theta, &theta_tilde, &problem.gain, cost.omega())?;
    Ok(ConfusingInstanceResult {
        alpha_star: alpha,
        theta_tilde,
        kl_cost,
        method,
        residual: value.abs(),
        iterations,
    })
}

/// Endpoint gaps, with unstable endpoints mapped to signed infinities.
pub fn endpoint_gaps(problem: &InterpolationProblem, cost: &CostSpec) -> Result<(f64, f64)> {
    let l0 = signed_gap(problem, 0.0, cost)?.unwrap_or(f64::NAN);
    let l1 = signed_gap(problem, 1.0, cost)?.unwrap_or(f64::NAN);
    Ok((l0, l1))
}

/// Safeguarded Newton search for the root of `L` on `[0, 1]`, started at 0.5.
///
/// Newton steps use a central-difference derivative; a step that leaves the
/// current sign bracket, or a probe whose cost is infinite, falls back to
/// bisection.
pub fn find_root_exact(problem: &InterpolationProblem, cost: &CostSpec, tol: f64) -> Result<ConfusingInstanceResult> {
    let (l0, l1) = endpoint_gaps(problem, cost)?;
    if !(l0 > 0.0 && l1 < 0.0) {
        return Err(Error::NoSignChange { l0, l1 });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut alpha = 0.5;
    let mut method = RootMethod::Newton;
    for iter in 1..=MAX_ROOT_ITER {
        let value = match signed_gap(problem, alpha, cost)? {
            Some(v) => v,
            None => match probe_bracket(problem, cost, lo, hi)? {
                Some((a, v)) => {
                    alpha = a;
                    v
                }
                None => return Err(Error::InterpolationUnstable { lo, hi }),
            },
        };
        if value.is_finite() && value.abs() <= tol {
            return finish(problem, cost, alpha, value, method, iter);
        }
        if value > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        if hi - lo <= 4.0 * f64::EPSILON {
            break;
        }
        let newton = if value.is_finite() {
            gap_derivative(problem, alpha, value, cost).map(|slope| alpha - value / slope)
        } else {
            None
        };
        alpha = match newton {
            Some(next) if next > lo && next < hi => next,
            _ => {
                method = RootMethod::Bisection;
                0.5 * (lo + hi)
            }
        };
    }
    // Bracket exhausted: report the midpoint with whatever residual it has.
    let mid = 0.5 * (lo + hi);
    match signed_gap(problem, mid, cost)? {
        Some(v) if v.is_finite() => finish(problem, cost, mid, v, RootMethod::Bisection, MAX_ROOT_ITER),
        _ => Err(Error::InterpolationUnstable { lo, hi }),
    }
}

/// Looks for any point of `(lo, hi)` where at least one gain is stable.
fn probe_bracket(problem: &InterpolationProblem, cost: &CostSpec, lo: f64, hi: f64) -> Result<Option<(f64, f64)>> {
    for frac in [0.25, 0.75, 0.125, 0.375, 0.625, 0.875] {
        let a = lo + frac * (hi - lo);
        if let Some(v) = signed_gap(problem, a, cost)? {
            return Ok(Some((a, v)));
        }
    }
    Ok(None)
}

/// Coefficients of the quadratic model `Tr P_K(Theta(alpha)) ~ p + alpha p_bar + alpha^2 p_dbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCoefficients {
    pub p: f64,
    pub p_bar: f64,
    pub p_dbar: f64,
}

fn taylor_matrices(problem: &InterpolationProblem, gain: &Mat, cost: &CostSpec) -> Result<[Mat; 3]> {
    let a_k = problem.theta.closed_loop_matrix(gain)?;
    let delta = problem.closed_loop_delta(gain);
    let q_k = cost.q() + gain.transpose() * cost.r() * gain;
    let p = control::solve_lyapunov_bellman(&a_k, &q_k)?;
    let pd = &p * &delta;
    let first = a_k.transpose() * &pd;
    let p_bar = control::solve_lyapunov_bellman(&a_k, &(&first + first.transpose()))?;
    let p_dbar = control::solve_lyapunov_bellman(&a_k, &(delta.transpose() * pd))?;
    Ok([p, p_bar, p_dbar])
}

/// Lyapunov route: `P_bar = A_K^T P_bar A_K + A_K^T P_K D + D^T P_K A_K` and
/// `P_dbar = A_K^T P_dbar A_K + D^T P_K D` with `D = Delta_K`.
pub fn taylor_coefficients(problem: &InterpolationProblem, gain: &Mat, cost: &CostSpec) -> Result<TaylorCoefficients> {
    let [p, p_bar, p_dbar] = taylor_matrices(problem, gain, cost)?;
    Ok(TaylorCoefficients {
        p: p.trace(),
        p_bar: p_bar.trace(),
        p_dbar: p_dbar.trace(),
    })
}

/// Kronecker route: with `X = A_K^T (x) A_K^T`, `Y = (I - X)^{-1}`,
/// `X_bar = (A_K (x) D + D (x) A_K)^T` and `X_dbar = (D (x) D)^T`,
/// `p = i^T Y q`, `p_bar = i^T Y X_bar Y q`, `p_dbar = i^T Y X_dbar Y q`
/// where `i = vec(I)` and `q = vec(Q_K)`.
pub fn taylor_coefficients_kronecker(
    problem: &InterpolationProblem,
    gain: &Mat,
    cost: &CostSpec,
) -> Result<TaylorCoefficients> {
    let theta = &problem.theta;
    let a_k = theta.closed_loop_matrix(gain)?;
    let rho = linalg::spectral_radius(&a_k);
    if !(rho < 1.0) {
        return Err(Error::UnstableClosedLoop(rho));
    }
    let d = a_k.nrows();
    let delta = problem.closed_loop_delta(gain);
    let q_k = cost.q() + gain.transpose() * cost.r() * gain;
    let x = a_k.transpose().kronecker(&a_k.transpose());
    let x_bar = (a_k.kronecker(&delta) + delta.kronecker(&a_k)).transpose();
    let x_dbar = delta.kronecker(&delta).transpose();
    let y = (Mat::identity(d * d, d * d) - x)
        .try_inverse()
        .ok_or(Error::UnstableClosedLoop(rho))?;
    let i = linalg::vec(&Mat::identity(d, d));
    let yq = &y * linalg::vec(&q_k);
    let it_y = i.transpose() * &y;
    Ok(TaylorCoefficients {
        p: (i.transpose() * &yq)[(0, 0)],
        p_bar: (&it_y * x_bar * &yq)[(0, 0)],
        p_dbar: (&it_y * x_dbar * &yq)[(0, 0)],
    })
}

/// Smallest real root of `c0 + c1 a + c2 a^2` in `(0, 1]`.
pub fn smallest_root_in_unit_interval(c0: f64, c1: f64, c2: f64) -> Option<f64> {
    let in_range = |r: f64| r.is_finite() && r > 0.0 && r <= 1.0;
    let scale = c0.abs().max(c1.abs());
    if c2.abs() <= 1e-14 * scale {
        if c1 == 0.0 {
            return None;
        }
        return Some(-c0 / c1).filter(|&r| in_range(r));
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let mut roots = [f64::NAN; 2];
    if q != 0.0 {
        roots = [q / c2, c0 / q];
    } else {
        // c1 == 0 and c0 == 0: double root at zero, outside (0, 1].
        roots[0] = 0.0;
    }
    roots.into_iter().filter(|&r| in_range(r)).reduce(f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaylorFallback {
    NegativeDiscriminant,
    NoRootInRange,
    /// The exact gap could not be evaluated at the approximate root.
    UnstableAtRoot,
}

#[derive(Debug, Clone)]
pub enum TaylorOutcome {
    Root(ConfusingInstanceResult),
    Fallback(TaylorFallback),
}

/// Closed-form root of the quadratic model of `L`. The returned residual is
/// the exact `|L(alpha)|` at the approximate root.
pub fn find_root_taylor(problem: &InterpolationProblem, cost: &CostSpec) -> Result<TaylorOutcome> {
    // Weighted by Omega so the model is of J itself; for isotropic noise this
    // is the plain trace up to a common factor.
    let base = taylor_matrices(problem, &problem.gain, cost)?;
    let alt = taylor_matrices(problem, &problem.gain_prime, cost)?;
    let coef = |i: usize| ((&alt[i] - &base[i]) * cost.omega()).trace();
    let (c0, c1, c2) = (coef(0), coef(1), coef(2));
    let Some(alpha) = smallest_root_in_unit_interval(c0, c1, c2) else {
        let fallback = if c1 * c1 - 4.0 * c2 * c0 < 0.0 {
            TaylorFallback::NegativeDiscriminant
        } else {
            TaylorFallback::NoRootInRange
        };
        return Ok(TaylorOutcome::Fallback(fallback));
    };
    match gap_at(problem, alpha, cost) {
        Ok(value) => finish(problem, cost, alpha, value, RootMethod::Taylor, 1).map(TaylorOutcome::Root),
        Err(Error::UnstableAlongPath(_)) => Ok(TaylorOutcome::Fallback(TaylorFallback::UnstableAtRoot)),
        Err(e) => Err(e),
    }
}

/// Taylor root when it verifies against the exact gap, safeguarded Newton
/// otherwise.
pub fn confusing_instance(problem: &InterpolationProblem, cost: &CostSpec) -> Result<ConfusingInstanceResult> {
    let (l0, l1) = endpoint_gaps(problem, cost)?;
    if !(l0 > 0.0 && l1 < 0.0) {
        return Err(Error::NoSignChange { l0, l1 });
    }
    if l0.is_finite() {
        if let Ok(TaylorOutcome::Root(root)) = find_root_taylor(problem, cost) {
            if root.residual <= TAYLOR_ACCEPT * l0.abs() {
                return Ok(root);
            }
        }
    }
    let scale = if l0.is_finite() { l0.abs() } else { l1.abs() };
    let tol = if scale.is_finite() { 1e-8 * scale } else { 1e-8 };
    find_root_exact(problem, cost, tol.max(1e-14))
}

/// Optimal solution of the current estimate, shared by every candidate of an
/// update epoch.
#[derive(Debug, Clone)]
pub struct BaseModel {
    pub theta: SystemParams,
    pub solution: OptimalSolution,
}

impl BaseModel {
    pub fn new(theta: SystemParams, cost: &CostSpec) -> Result<Self> {
        let solution = optimal_solution(&theta, cost)?;
        Ok(Self { theta, solution })
    }
}

/// A candidate that passed every condition of the mask.
#[derive(Debug, Clone)]
pub struct ScreenedCandidate {
    pub theta_bar: SystemParams,
    pub solution: OptimalSolution,
    /// `J_{K_hat}(Theta_bar) - J_{K_bar}(Theta_bar)`.
    pub membership_gap: f64,
}

/// Mask evaluation against a precomputed base. Returns `None` when any
/// condition fails or any quantity cannot be computed.
pub fn screen_candidate(
    base: &BaseModel,
    theta_bar: &SystemParams,
    cost: &CostSpec,
    epsilon: f64,
) -> Option<ScreenedCandidate> {
    let solution = optimal_solution(theta_bar, cost).ok()?;
    let k_hat = base.solution.policy.gain();
    let k_bar = solution.policy.gain();
    // Closed-loop stability of both optimal loops.
    if !(base.solution.policy.stabilizing() && solution.policy.stabilizing()) {
        return None;
    }
    // Interpolation stability: both products positive semi-definite
    // (symmetric part).
    let hat_hat = base.solution.policy.closed_loop();
    let hat_bar = base.theta.closed_loop_matrix(k_bar).ok()?;
    let bar_hat = theta_bar.closed_loop_matrix(k_hat).ok()?;
    let bar_bar = solution.policy.closed_loop();
    if min_sym_eigenvalue(&(hat_hat * hat_bar)) < PSD_FLOOR || min_sym_eigenvalue(&(bar_hat * bar_bar)) < PSD_FLOOR {
        return None;
    }
    // Alternative-set membership: K_hat is at least epsilon worse than K_bar
    // on the candidate.
    let j_hat_on_bar = policy_cost(theta_bar, k_hat, cost).ok()?.j;
    let membership_gap = j_hat_on_bar - solution.cost;
    if !(membership_gap > epsilon) {
        return None;
    }
    Some(ScreenedCandidate {
        theta_bar: theta_bar.clone(),
        solution,
        membership_gap,
    })
}

/// Whether `theta_bar` is a usable alternative to `theta_hat`.
pub fn candidate_mask(theta_hat: &SystemParams, theta_bar: &SystemParams, cost: &CostSpec, epsilon: f64) -> bool {
    match BaseModel::new(theta_hat.clone(), cost) {
        Ok(base) => screen_candidate(&base, theta_bar, cost, epsilon).is_some(),
        Err(_) => false,
    }
}

/// Which matrix the information norm of the MED index is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MedNorm {
    /// `||Theta_bar||^2_{V^{-1}}`.
    #[default]
    Candidate,
    /// `||Theta_bar - Theta_hat||^2_{V^{-1}}`.
    Perturbation,
}

/// `-kl_cost / norm`.
pub fn med_index(kl_cost: f64, weighted_norm: f64) -> f64 {
    if kl_cost == 0.0 {
        return 0.0;
    }
    -kl_cost / weighted_norm
}

/// MED coefficient of a screened candidate.
pub fn screened_coefficient(
    base: &BaseModel,
    candidate: &ScreenedCandidate,
    design: &Mat,
    cost: &CostSpec,
    norm: MedNorm,
) -> Result<f64> {
    let problem = InterpolationProblem::with_gains(
        base.theta.clone(),
        base.solution.policy.gain().clone(),
        candidate.theta_bar.clone(),
        candidate.solution.policy.gain().clone(),
    )?;
    let kl_cost = confusing_instance(&problem, cost)?.kl_cost;
    screened_coefficient_from_kl(base, candidate, kl_cost, design, norm)
}

/// MED coefficient from an already computed refined divergence, floored at
/// [`MIN_KL_COST`].
pub fn screened_coefficient_from_kl(
    base: &BaseModel,
    candidate: &ScreenedCandidate,
    kl_cost: f64,
    design: &Mat,
    norm: MedNorm,
) -> Result<f64> {
    let target = match norm {
        MedNorm::Candidate => candidate.theta_bar.theta(),
        MedNorm::Perturbation => candidate.theta_bar.theta() - base.theta.theta(),
    };
    if !linalg::is_positive_definite(design, 0.0) {
        return Err(Error::SingularDesign);
    }
    let weighted = linalg::inv_weighted_sq_norm(design, &target)?;
    Ok(med_index(kl_cost.max(MIN_KL_COST), weighted))
}

/// `H(Theta_bar) = -K(Theta_hat || Theta_bar) / ||Theta_bar||^2_{V^{-1}}`
/// for a candidate that passed the mask.
pub fn med_coefficient(
    theta_hat: &SystemParams,
    theta_bar: &SystemParams,
    design: &Mat,
    cost: &CostSpec,
) -> Result<f64> {
    let base = BaseModel::new(theta_hat.clone(), cost)?;
    let solution = optimal_solution(theta_bar, cost)?;
    let membership_gap = policy_cost(theta_bar, base.solution.policy.gain(), cost)
        .map(|e| e.j - solution.cost)
        .unwrap_or(f64::INFINITY);
    let candidate = ScreenedCandidate {
        theta_bar: theta_bar.clone(),
        solution,
        membership_gap,
    };
    screened_coefficient(&base, &candidate, design, cost, MedNorm::Candidate)
}
