//! Linear-Gaussian plants.

use alloc::string::String;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::control::{optimal_solution, OptimalSolution};
use crate::{CostSpec, Error, Mat, Result, SystemParams, Vector};

pub const GRAVITY: f64 = 9.81;
pub const PENDULUM_DT: f64 = 0.02;

/// A true system together with its cost, initial state and regret reference.
#[derive(Debug, Clone)]
pub struct Environment {
    name: String,
    theta_true: SystemParams,
    cost: CostSpec,
    x0: Vector,
    horizon_default: usize,
    optimal: OptimalSolution,
    noise_factor: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x_next: Vector,
    /// `x^T Q x + u^T R u`.
    pub cost_incurred: f64,
}

impl Environment {
    /// Fails with `NotStabilizable` when the Riccati equation of the true
    /// system has no stabilizing solution.
    pub fn new(
        name: impl Into<String>,
        theta_true: SystemParams,
        cost: CostSpec,
        x0: Vector,
        horizon_default: usize,
    ) -> Result<Self> {
        if cost.state_dim() != theta_true.state_dim() || cost.input_dim() != theta_true.input_dim() {
            return Err(Error::IncompatibleShapes("cost matrices do not match the system"));
        }
        if x0.len() != theta_true.state_dim() {
            return Err(Error::IncompatibleShapes("x0 must have length d"));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x0"));
        }
        let optimal = match optimal_solution(&theta_true, &cost) {
            Ok(s) if s.cost.is_finite() => s,
            Ok(_) | Err(Error::DareDiverged) | Err(Error::UnstableClosedLoop(_)) => {
                return Err(Error::NotStabilizable)
            }
            Err(e) => return Err(e),
        };
        let noise_factor = cost
            .omega()
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("Omega"))?
            .l();
        Ok(Self {
            name: name.into(),
            theta_true,
            cost,
            x0,
            horizon_default,
            optimal,
            noise_factor,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theta_true(&self) -> &SystemParams {
        &self.theta_true
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn horizon_default(&self) -> usize {
        self.horizon_default
    }

    pub fn state_dim(&self) -> usize {
        self.theta_true.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.theta_true.input_dim()
    }

    /// `J*(Theta*)`, the per-step cost the regret is measured against.
    pub fn optimal_cost(&self) -> f64 {
        self.optimal.cost
    }

    pub fn optimal(&self) -> &OptimalSolution {
        &self.optimal
    }

    /// Stage cost `x^T Q x + u^T R u`.
    pub fn stage_cost(&self, x: &Vector, u: &Vector) -> f64 {
        x.dot(&(self.cost.q() * x)) + u.dot(&(self.cost.r() * u))
    }

    /// One transition `x' = A x + B u + w`, `w ~ N(0, Omega)`. Exactly `d`
    /// standard normals are drawn from `rng` per call.
    pub fn step<R: Rng + ?Sized>(&self, x: &Vector, u: &Vector, rng: &mut R) -> StepOutcome {
        let d = self.state_dim();
        let white = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x_next = self.theta_true.a() * x + self.theta_true.b() * u + &self.noise_factor * white;
        StepOutcome {
            x_next,
            cost_incurred: self.stage_cost(x, u),
        }
    }
}

/// Forward-Euler discretization of the linearized pendulum about the upright
/// position; state is (angle, angular velocity), input is torque.
pub fn pendulum_linearized(mass: f64, length: f64, dt: f64) -> Result<SystemParams> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::BadEnvParam("mass must be positive"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::BadEnvParam("length must be positive"));
    }
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::BadEnvParam("dt must lie in (0, 0.1]"));
    }
    let a = Mat::from_row_slice(2, 2, &[1.0, dt, GRAVITY / length * dt, 1.0]);
    let b = Mat::from_row_slice(2, 1, &[0.0, dt / (mass * length * length)]);
    SystemParams::new(a, b)
}
