//! Exact control primitives: closed loops, the discrete algebraic Riccati
//! equation, Lyapunov equations and policy evaluation.

use crate::linalg::{self, spectral_radius, symmetrize};
use crate::{Error, Mat, Result};

/// Largest state dimension for which Lyapunov equations are solved through
/// the `d^2 x d^2` Kronecker system.
pub const KRONECKER_MAX_DIM: usize = 8;

const DARE_MAX_ITER: usize = 200;
const DARE_REL_TOL: f64 = 1e-10;
const DARE_ACCEPT_TOL: f64 = 1e-8;

/// The dynamics `x' = A x + B u + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    a: Mat,
    b: Mat,
}

impl SystemParams {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::IncompatibleShapes("A must be square and non-empty"));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::IncompatibleShapes("B must have d rows and k >= 1 columns"));
        }
        if !linalg::all_finite(&a) || !linalg::all_finite(&b) {
            return Err(Error::NonFinite("system matrices"));
        }
        Ok(Self { a, b })
    }

    pub fn zeros(state_dim: usize, input_dim: usize) -> Self {
        Self {
            a: Mat::zeros(state_dim, state_dim),
            b: Mat::zeros(state_dim, input_dim),
        }
    }

    /// Builds the system from the stacked parameter `[A^T; B^T]`.
    pub fn from_theta(theta: &Mat, state_dim: usize) -> Result<Self> {
        if theta.ncols() != state_dim || theta.nrows() <= state_dim {
            return Err(Error::IncompatibleShapes("theta must be (d + k) x d"));
        }
        let k = theta.nrows() - state_dim;
        let a = theta.rows(0, state_dim).transpose();
        let b = theta.rows(state_dim, k).transpose();
        Self::new(a, b)
    }

    /// The stacked parameter `[A^T; B^T]`, shape `(d + k) x d`.
    pub fn theta(&self) -> Mat {
        let (d, k) = (self.state_dim(), self.input_dim());
        let mut theta = Mat::zeros(d + k, d);
        theta.rows_mut(0, d).copy_from(&self.a.transpose());
        theta.rows_mut(d, k).copy_from(&self.b.transpose());
        theta
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `A - B K`.
    pub fn closed_loop_matrix(&self, gain: &Mat) -> Result<Mat> {
        if gain.nrows() != self.input_dim() || gain.ncols() != self.state_dim() {
            return Err(Error::IncompatibleShapes("gain must be k x d"));
        }
        Ok(&self.a - &self.b * gain)
    }
}

/// Known cost and noise model shared by the true system and every
/// hypothesis about it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    q: Mat,
    r: Mat,
    sigma_w: f64,
    omega: Mat,
    /// Bound `D` on the optimal average cost.
    cost_bound: f64,
    /// Bound `S` on `sqrt(Tr(Theta Theta^T))`.
    param_bound: f64,
}

impl CostSpec {
    pub const DEFAULT_COST_BOUND: f64 = 1e6;
    pub const DEFAULT_PARAM_BOUND: f64 = 10.0;

    /// Isotropic noise `Omega = sigma_w^2 I`.
    pub fn new(q: Mat, r: Mat, sigma_w: f64) -> Result<Self> {
        if !q.is_square() || !r.is_square() {
            return Err(Error::IncompatibleShapes("Q and R must be square"));
        }
        for (name, m) in [("Q", &q), ("R", &r)] {
            if !linalg::all_finite(m) {
                return Err(Error::NonFinite(name));
            }
            let asym = (m - m.transpose()).norm();
            if asym > 1e-12 * (1.0 + m.norm()) || linalg::min_sym_eigenvalue(m) <= 1e-10 {
                return Err(Error::NotPositiveDefinite(name));
            }
        }
        if !(sigma_w.is_finite() && sigma_w > 0.0) {
            return Err(Error::InvalidConfig("sigma_w must be positive"));
        }
        let d = q.nrows();
        Ok(Self {
            omega: Mat::identity(d, d) * (sigma_w * sigma_w),
            q,
            r,
            sigma_w,
            cost_bound: Self::DEFAULT_COST_BOUND,
            param_bound: Self::DEFAULT_PARAM_BOUND,
        })
    }

    /// Replaces the isotropic noise covariance.
    pub fn with_omega(mut self, omega: Mat) -> Result<Self> {
        if omega.shape() != self.q.shape() {
            return Err(Error::IncompatibleShapes("Omega must be d x d"));
        }
        if !linalg::is_positive_definite(&omega, 1e-12) {
            return Err(Error::NotPositiveDefinite("Omega"));
        }
        self.omega = symmetrize(&omega);
        Ok(self)
    }

    pub fn with_bounds(mut self, cost_bound: f64, param_bound: f64) -> Result<Self> {
        if !(cost_bound > 0.0 && param_bound > 0.0) {
            return Err(Error::InvalidConfig("D and S must be positive"));
        }
        self.cost_bound = cost_bound;
        self.param_bound = param_bound;
        Ok(self)
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn r(&self) -> &Mat {
        &self.r
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn omega(&self) -> &Mat {
        &self.omega
    }

    pub fn cost_bound(&self) -> f64 {
        self.cost_bound
    }

    pub fn param_bound(&self) -> f64 {
        self.param_bound
    }

    pub fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    fn check_system(&self, theta: &SystemParams) -> Result<()> {
        if theta.state_dim() != self.state_dim() || theta.input_dim() != self.input_dim() {
            return Err(Error::IncompatibleShapes("cost matrices do not match the system"));
        }
        Ok(())
    }
}

/// A feedback gain together with the closed loop it induces on one system.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPolicy {
    gain: Mat,
    closed_loop: Mat,
    spectral_radius: f64,
}

impl GainPolicy {
    pub fn gain(&self) -> &Mat {
        &self.gain
    }

    pub fn closed_loop(&self) -> &Mat {
        &self.closed_loop
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn stabilizing(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

/// Value matrix `P_K` and average cost `J_K` of a stabilizing gain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub p: Mat,
    pub j: f64,
}

pub fn closed_loop(theta: &SystemParams, gain: &Mat) -> Result<GainPolicy> {
    let closed_loop = theta.closed_loop_matrix(gain)?;
    let spectral_radius = spectral_radius(&closed_loop);
    Ok(GainPolicy {
        gain: gain.clone(),
        closed_loop,
        spectral_radius,
    })
}

/// `P - A^T P A - Q + A^T P B (B^T P B + R)^{-1} B^T P A`.
pub fn dare_residual(theta: &SystemParams, cost: &CostSpec, p: &Mat) -> Mat {
    let (a, b) = (theta.a(), theta.b());
    let pa = p * a;
    let bpa = b.transpose() * &pa;
    let s = b.transpose() * p * b + cost.r();
    let correction = match s.clone().cholesky() {
        Some(chol) => bpa.transpose() * chol.solve(&bpa),
        None => Mat::from_element(p.nrows(), p.ncols(), f64::NAN),
    };
    p - a.transpose() * pa - cost.q() + correction
}

fn dare_relative_residual(theta: &SystemParams, cost: &CostSpec, p: &Mat) -> f64 {
    dare_residual(theta, cost, p).norm() / (1.0 + p.norm())
}

/// `(B^T P B + R)^{-1} B^T P A`.
fn riccati_gain(theta: &SystemParams, cost: &CostSpec, p: &Mat) -> Option<Mat> {
    let (a, b) = (theta.a(), theta.b());
    let s = b.transpose() * p * b + cost.r();
    s.cholesky().map(|chol| chol.solve(&(b.transpose() * p * a)))
}

/// Structured doubling: `H_j` converges quadratically to the stabilizing
/// solution when `(A, B)` is stabilizable.
fn dare_doubling(theta: &SystemParams, cost: &CostSpec) -> Option<Mat> {
    let d = theta.state_dim();
    let b = theta.b();
    let r_chol = cost.r().clone().cholesky()?;
    let mut g = b * r_chol.solve(&b.transpose());
    let mut a = theta.a().clone();
    let mut h = cost.q().clone();
    let eye = Mat::identity(d, d);
    // Once the residual test passes, one more (quadratically convergent)
    // step is taken to push the error to rounding level.
    let mut finishing = false;
    for _ in 0..DARE_MAX_ITER {
        let lu = (&eye + &g * &h).lu();
        let wa = lu.solve(&a)?;
        let wg = lu.solve(&g)?;
        let h_next = symmetrize(&(&h + a.transpose() * &h * &wa));
        let g_next = symmetrize(&(&g + &a * wg * a.transpose()));
        let a_next = &a * wa;
        if !linalg::all_finite(&h_next) || !linalg::all_finite(&g_next) {
            return None;
        }
        let step = (&h_next - &h).norm();
        h = h_next;
        g = g_next;
        a = a_next;
        if finishing || step <= 1e-15 * (1.0 + h.norm()) {
            break;
        }
        finishing = dare_relative_residual(theta, cost, &h) <= DARE_REL_TOL;
    }
    Some(h)
}

/// Plain Riccati value iteration from `P_0 = Q`.
fn dare_value_iteration(theta: &SystemParams, cost: &CostSpec) -> Option<Mat> {
    let (a, b) = (theta.a(), theta.b());
    let mut p = cost.q().clone();
    for _ in 0..DARE_MAX_ITER {
        let gain = riccati_gain(theta, cost, &p)?;
        let next = symmetrize(&(cost.q() + a.transpose() * &p * a - a.transpose() * &p * b * gain));
        if !linalg::all_finite(&next) {
            return None;
        }
        p = next;
        if dare_relative_residual(theta, cost, &p) <= DARE_REL_TOL {
            break;
        }
    }
    Some(p)
}

/// One Newton (Hewer) step: evaluate the gain induced by `p` exactly.
fn hewer_polish(theta: &SystemParams, cost: &CostSpec, p: &Mat) -> Option<Mat> {
    let gain = riccati_gain(theta, cost, p)?;
    let a_k = theta.closed_loop_matrix(&gain).ok()?;
    let q_k = cost.q() + gain.transpose() * cost.r() * &gain;
    solve_lyapunov_bellman(&a_k, &q_k).ok()
}

fn accept_dare(theta: &SystemParams, cost: &CostSpec, p: Mat) -> Option<Mat> {
    let mut p = p;
    let mut residual = dare_relative_residual(theta, cost, &p);
    if !(residual <= DARE_REL_TOL) {
        if let Some(polished) = hewer_polish(theta, cost, &p) {
            let polished_residual = dare_relative_residual(theta, cost, &polished);
            if polished_residual < residual {
                p = polished;
                residual = polished_residual;
            }
        }
    }
    if !(residual <= DARE_ACCEPT_TOL) || linalg::min_sym_eigenvalue(&p) < -1e-9 * (1.0 + p.norm()) {
        return None;
    }
    // Only the stabilizing solution is meaningful; an unstabilizable pair can
    // still produce a tiny relative residual as P grows without bound.
    let gain = riccati_gain(theta, cost, &p)?;
    let rho = spectral_radius(&theta.closed_loop_matrix(&gain).ok()?);
    (rho < 1.0).then_some(p)
}

/// Stabilizing solution `P*` of the discrete algebraic Riccati equation.
pub fn solve_dare(theta: &SystemParams, cost: &CostSpec) -> Result<Mat> {
    cost.check_system(theta)?;
    if let Some(p) = dare_doubling(theta, cost).and_then(|p| accept_dare(theta, cost, p)) {
        return Ok(p);
    }
    dare_value_iteration(theta, cost)
        .and_then(|p| accept_dare(theta, cost, p))
        .ok_or(Error::DareDiverged)
}

/// Optimal gain, its Riccati matrix and optimal average cost of one system.
#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub policy: GainPolicy,
    pub riccati: Mat,
    pub cost: f64,
}

pub fn optimal_solution(theta: &SystemParams, cost: &CostSpec) -> Result<OptimalSolution> {
    let riccati = solve_dare(theta, cost)?;
    let gain = riccati_gain(theta, cost, &riccati).ok_or(Error::DareDiverged)?;
    let policy = closed_loop(theta, &gain)?;
    if !policy.stabilizing() {
        return Err(Error::DareDiverged);
    }
    let j = (&riccati * cost.omega()).trace();
    Ok(OptimalSolution {
        policy,
        riccati,
        cost: j,
    })
}

/// `K* = (B^T P* B + R)^{-1} B^T P* A`, applied as `u = -K* x`.
pub fn optimal_gain(theta: &SystemParams, cost: &CostSpec) -> Result<GainPolicy> {
    optimal_solution(theta, cost).map(|s| s.policy)
}

fn lyapunov_kronecker(a_k: &Mat, q_k: &Mat) -> Option<Mat> {
    let d = a_k.nrows();
    let at = a_k.transpose();
    let system = Mat::identity(d * d, d * d) - at.kronecker(&at);
    let lu = system.clone().lu();
    let rhs = linalg::vec(q_k);
    let mut x = lu.solve(&rhs)?;
    // One step of iterative refinement.
    let correction = lu.solve(&(&rhs - &system * &x))?;
    x += correction;
    Some(linalg::unvec(&x, d, d))
}

/// Squared Smith iteration: `X_{j+1} = X_j + A_j^T X_j A_j`, `A_{j+1} = A_j^2`.
fn lyapunov_smith(a_k: &Mat, q_k: &Mat) -> Option<Mat> {
    let mut x = q_k.clone();
    let mut a = a_k.clone();
    for _ in 0..64 {
        let term = a.transpose() * &x * &a;
        x += &term;
        if !linalg::all_finite(&x) {
            return None;
        }
        if term.norm() <= f64::EPSILON * x.norm() {
            return Some(x);
        }
        a = &a * &a;
    }
    Some(x)
}

fn check_lyapunov_args(a_k: &Mat, q_k: &Mat) -> Result<()> {
    if !a_k.is_square() || q_k.shape() != a_k.shape() {
        return Err(Error::IncompatibleShapes("Lyapunov operands must be square and equal-sized"));
    }
    let rho = spectral_radius(a_k);
    if !(rho < 1.0) {
        return Err(Error::UnstableClosedLoop(rho));
    }
    Ok(())
}

fn finish_lyapunov(q_k: &Mat, p: Option<Mat>) -> Result<Mat> {
    let p = p.ok_or(Error::UnstableClosedLoop(1.0))?;
    let asym = (q_k - q_k.transpose()).norm();
    if asym <= 1e-12 * (1.0 + q_k.norm()) {
        Ok(symmetrize(&p))
    } else {
        Ok(p)
    }
}

/// Solves `P = Q_K + A_K^T P A_K` for a stable `A_K`.
pub fn solve_lyapunov_bellman(a_k: &Mat, q_k: &Mat) -> Result<Mat> {
    check_lyapunov_args(a_k, q_k)?;
    let p = if a_k.nrows() <= KRONECKER_MAX_DIM {
        lyapunov_kronecker(a_k, q_k)
    } else {
        lyapunov_smith(a_k, q_k)
    };
    finish_lyapunov(q_k, p)
}

/// Same equation, always through the doubling series regardless of size.
pub fn solve_lyapunov_bellman_series(a_k: &Mat, q_k: &Mat) -> Result<Mat> {
    check_lyapunov_args(a_k, q_k)?;
    finish_lyapunov(q_k, lyapunov_smith(a_k, q_k))
}

/// `P_K` and `J_K = Tr(P_K Omega)` (which is `sigma_w^2 Tr(P_K)` for
/// isotropic noise) of the gain `K` on `theta`.
pub fn policy_cost(theta: &SystemParams, gain: &Mat, cost: &CostSpec) -> Result<PolicyEvaluation> {
    cost.check_system(theta)?;
    let a_k = theta.closed_loop_matrix(gain)?;
    let q_k = cost.q() + gain.transpose() * cost.r() * gain;
    let p = solve_lyapunov_bellman(&a_k, &q_k)?;
    let j = (&p * cost.omega()).trace();
    Ok(PolicyEvaluation { p, j })
}

/// Stationary state covariance `Sigma = Omega + A_K Sigma A_K^T`.
pub fn stationary_covariance(theta: &SystemParams, gain: &Mat, omega: &Mat) -> Result<Mat> {
    let a_k = theta.closed_loop_matrix(gain)?;
    solve_lyapunov_bellman(&a_k.transpose(), omega)
}
