//! The cost gap `L(alpha)` along the segment between two systems.

use medlq_core::control::closed_loop;
use medlq_core::divergence::{self, TaylorOutcome};
use medlq_core::{CostSpec, Environment, Error, InterpolationProblem, SystemParams};

use crate::{BenchError, Result};

/// Root tolerance of the exact search, on `|L|`.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint {
    pub alpha: f64,
    /// `None` where either gain fails to stabilize `Theta(alpha)`.
    pub gap: Option<f64>,
    pub stable_k: bool,
    pub stable_k_prime: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeRoot {
    pub alpha: f64,
    /// `L` at `alpha`.
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Landscape {
    pub points: Vec<LandscapePoint>,
    pub l0: f64,
    pub l1: f64,
    pub exact: LandscapeRoot,
    /// Missing when `L(0)` is infinite, when the quadratic model has no root
    /// in `(0, 1]`, or when its root is not on the stable part of the segment.
    pub taylor: Option<LandscapeRoot>,
}

/// Samples `L` on `grid_size` evenly spaced points of `[0, 1]` (endpoints
/// included) and locates its root both exactly and with the Taylor model.
pub fn landscape(theta: &SystemParams, theta_prime: &SystemParams, cost: &CostSpec, grid_size: usize) -> Result<Landscape> {
    if grid_size < 2 {
        return Err(BenchError::BadSpec("the landscape grid needs at least 2 points".into()));
    }
    let problem = InterpolationProblem::new(theta.clone(), theta_prime.clone(), cost)?;
    let (l0, l1) = divergence::endpoint_gaps(&problem, cost)?;
    if !(l0 > 0.0 && l1 < 0.0) {
        return Err(BenchError::NoSignChange { l0, l1 });
    }
    let mut points = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let alpha = i as f64 / (grid_size - 1) as f64;
        let sys = divergence::interpolate(&problem, alpha)?;
        let stable_k = closed_loop(&sys, problem.gain())?.stabilizing();
        let stable_k_prime = closed_loop(&sys, problem.gain_prime())?.stabilizing();
        let gap = match divergence::cost_gap(&problem, alpha, cost) {
            Ok(v) => Some(v),
            Err(Error::UnstableAlongPath(_)) => None,
            Err(e) => return Err(e.into()),
        };
        points.push(LandscapePoint {
            alpha,
            gap,
            stable_k,
            stable_k_prime,
        });
    }
    let exact = divergence::find_root_exact(&problem, cost, EXACT_TOL)?;
    // The quadratic model expands both costs at alpha = 0, so it needs both
    // gains to stabilize the first system.
    let taylor = if l0.is_finite() {
        match divergence::find_root_taylor(&problem, cost) {
            Ok(TaylorOutcome::Root(r)) => Some(r),
            Ok(TaylorOutcome::Fallback(_)) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let signed = |r: &medlq_core::ConfusingInstanceResult| -> Result<LandscapeRoot> {
        Ok(LandscapeRoot {
            alpha: r.alpha_star,
            gap: divergence::cost_gap(&problem, r.alpha_star, cost)?,
            iterations: r.iterations,
        })
    };
    Ok(Landscape {
        points,
        l0,
        l1,
        exact: signed(&exact)?,
        taylor: taylor.as_ref().map(signed).transpose()?,
    })
}

/// Landscape between the true systems of two environments, under the cost
/// of the first.
pub fn landscape_between(a: &Environment, b: &Environment, grid_size: usize) -> Result<Landscape> {
    if a.state_dim() != b.state_dim() || a.input_dim() != b.input_dim() {
        return Err(BenchError::BadSpec(format!(
            "`{}` and `{}` have different dimensions",
            a.name(),
            b.name()
        )));
    }
    landscape(a.theta_true(), b.theta_true(), a.cost(), grid_size)
}
