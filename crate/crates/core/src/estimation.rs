//! Regularized least-squares identification of `Theta = [A^T; B^T]`.


use crate::linalg;
use crate::{Error, Mat, Result, SystemParams, Vector};

/// Sufficient statistics of the ridge regression of `x_{t+1}` on
/// `z_t = (x_t, u_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    v: Mat,
    cross_sum: Mat,
    lambda: f64,
    state_dim: usize,
    log_det_ref: f64,
    t: usize,
    last_update_t: usize,
}

/// Point estimate and confidence radius at one update epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsEstimate {
    pub theta_hat: SystemParams,
    pub beta: f64,
}

impl DesignState {
    /// `V_0 = lambda I`, no data.
    pub fn new(state_dim: usize, input_dim: usize, lambda: f64) -> Result<Self> {
        if state_dim == 0 || input_dim == 0 {
            return Err(Error::IncompatibleShapes("dimensions must be positive"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be positive"));
        }
        let n = state_dim + input_dim;
        Ok(Self {
            v: Mat::identity(n, n) * lambda,
            cross_sum: Mat::zeros(n, state_dim),
            lambda,
            state_dim,
            log_det_ref: n as f64 * lambda.ln(),
            t: 0,
            last_update_t: 0,
        })
    }

    pub fn v(&self) -> &Mat {
        &self.v
    }

    pub fn cross_sum(&self) -> &Mat {
        &self.cross_sum
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.v.nrows() - self.state_dim
    }

    /// Number of ingested transitions.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn last_update_t(&self) -> usize {
        self.last_update_t
    }

    /// `ln det V` at the last accepted update (`ln det V_0` initially).
    pub fn log_det_ref(&self) -> f64 {
        self.log_det_ref
    }

    pub fn log_det(&self) -> f64 {
        linalg::log_det_spd(&self.v).unwrap_or(f64::NAN)
    }

    /// Records the transition `(x, u) -> x_next`.
    pub fn ingest(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()> {
        let (d, k) = (self.state_dim, self.input_dim());
        if x.len() != d || u.len() != k || x_next.len() != d {
            return Err(Error::IncompatibleShapes("transition does not match the design dimensions"));
        }
        if x.iter().chain(u.iter()).chain(x_next.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteObservation);
        }
        let z = Vector::from_iterator(d + k, x.iter().chain(u.iter()).copied());
        self.v.ger(1.0, &z, &z, 1.0);
        self.cross_sum.ger(1.0, &z, x_next, 1.0);
        self.t += 1;
        Ok(())
    }

    /// `Theta_hat = V^{-1} sum z x'^T` and
    /// `beta = d sigma_w sqrt(2 ln(det(V)^{1/2} / (det(lambda I)^{1/2} delta))) + sqrt(lambda) S`.
    pub fn rls_estimate(&self, sigma_w: f64, delta: f64, param_bound: f64) -> Result<RlsEstimate> {
        let chol = self.v.clone().cholesky().ok_or(Error::SingularDesign)?;
        let theta = chol.solve(&self.cross_sum);
        let theta_hat = SystemParams::from_theta(&theta, self.state_dim)?;
        let log_det = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum::<f64>();
        let beta = confidence_radius(
            self.state_dim,
            self.v.nrows(),
            log_det,
            self.lambda,
            sigma_w,
            delta,
            param_bound,
        );
        Ok(RlsEstimate { theta_hat, beta })
    }

    /// `det V > 2 det V_ref` and at least `patience` steps since the last update.
    pub fn doubling_due(&self, patience: usize) -> bool {
        self.log_det() > core::f64::consts::LN_2 + self.log_det_ref && self.t - self.last_update_t >= patience
    }

    /// Resets the doubling reference to the current design.
    pub fn mark_update(&mut self) {
        self.log_det_ref = self.log_det();
        self.last_update_t = self.t;
    }
}

fn confidence_radius(
    d: usize,
    n: usize,
    log_det: f64,
    lambda: f64,
    sigma_w: f64,
    delta: f64,
    param_bound: f64,
) -> f64 {
    let log_ratio = 0.5 * (log_det - n as f64 * lambda.ln()) - delta.ln();
    d as f64 * sigma_w * (2.0 * log_ratio.max(0.0)).sqrt() + lambda.sqrt() * param_bound
}

/// `||Theta||^2_{V^{-1}} = Tr(Theta^T V^{-1} Theta)`.
pub fn weighted_norm_inv(v: &Mat, theta: &SystemParams) -> Result<f64> {
    if !linalg::is_positive_definite(v, 0.0) {
        return Err(Error::SingularDesign);
    }
    linalg::inv_weighted_sq_norm(v, &theta.theta())
}

/// Ellipsoid norm `||M||_V = sqrt(Tr(M^T V M))`.
pub fn ellipsoid_norm(v: &Mat, m: &Mat) -> f64 {
    linalg::weighted_sq_norm(v, m).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn v1(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    #[test]
    fn ingest_adds_outer_product() {
        let mut s = DesignState::new(1, 1, 1.0).unwrap();
        s.ingest(&v1(1.0), &v1(0.0), &v1(0.0)).unwrap();
        assert_eq!(s.v(), &Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(s.t(), 1);
        let before = s.log_det();
        s.ingest(&v1(1.0), &v1(0.0), &v1(0.0)).unwrap();
        assert!(s.log_det() > before);
    }

    #[test]
    fn ingest_rejects_nonfinite() {
        let mut s = DesignState::new(1, 1, 1.0).unwrap();
        let err = s.ingest(&v1(f64::NAN), &v1(0.0), &v1(0.0));
        assert_eq!(err, Err(Error::NonfiniteObservation));
        assert_eq!(s.t(), 0);
    }

    #[test]
    fn ingest_matches_batch_sums() {
        let mut rng = crate::SimRng::seed_from_u64(3);
        let (d, k) = (3, 2);
        let mut s = DesignState::new(d, k, 0.5).unwrap();
        let mut zs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..1000 {
            let x = Vector::from_fn(d, |_, _| rng.sample(StandardNormal));
            let u = Vector::from_fn(k, |_, _| rng.sample(StandardNormal));
            let y = Vector::from_fn(d, |_, _| rng.sample(StandardNormal));
            s.ingest(&x, &u, &y).unwrap();
            zs.push(Vector::from_iterator(d + k, x.iter().chain(u.iter()).copied()));
            ys.push(y);
        }
        let z = Mat::from_fn(d + k, zs.len(), |i, j| zs[j][i]);
        let y = Mat::from_fn(d, ys.len(), |i, j| ys[j][i]);
        let v = Mat::identity(d + k, d + k) * 0.5 + &z * z.transpose();
        let c = &z * y.transpose();
        assert!((s.v() - &v).norm() <= 1e-9 * v.norm());
        assert!((s.cross_sum() - c).norm() <= 1e-9 * v.norm());
        assert!(linalg::is_positive_definite(s.v(), 0.0));
    }

    #[test]
    fn ridge_shrinkage_scalar() {
        // x' = 0.8 x with x = 1 and u = 0 at every step.
        let lambda = 1e-3;
        let mut s = DesignState::new(1, 1, lambda).unwrap();
        for _ in 0..50 {
            s.ingest(&v1(1.0), &v1(0.0), &v1(0.8)).unwrap();
        }
        let est = s.rls_estimate(1.0, 0.1, 1.0).unwrap();
        assert!((est.theta_hat.a()[(0, 0)] - 0.8 * 50.0 / (lambda + 50.0)).abs() < 1e-12);
        assert_eq!(est.theta_hat.b()[(0, 0)], 0.0);
    }

    #[test]
    fn radius_without_data() {
        let s = DesignState::new(2, 1, 4.0).unwrap();
        let est = s.rls_estimate(0.5, 0.05, 3.0).unwrap();
        let expected = 2.0 * 0.5 * (2.0 * (1.0 / 0.05f64).ln()).sqrt() + 2.0 * 3.0;
        assert!((est.beta - expected).abs() < 1e-12);
        assert_eq!(est.theta_hat.theta(), Mat::zeros(3, 2));
    }

    #[test]
    fn doubling_rule() {
        let mut s = DesignState::new(1, 1, 1.0).unwrap();
        // det V = 2.1 after a single ingest of z = (1.1^{1/2}, 0).
        s.ingest(&v1(1.1f64.sqrt()), &v1(0.0), &v1(0.0)).unwrap();
        assert!(!s.doubling_due(10));
        assert!(s.doubling_due(1));
        s.mark_update();
        assert!(!s.doubling_due(0));
        assert!((s.log_det_ref() - 2.1f64.ln()).abs() < 1e-12);
        assert_eq!(s.last_update_t(), 1);
    }

    #[test]
    fn doubling_rule_patience_and_threshold() {
        let mut s = DesignState::new(1, 1, 1.0).unwrap();
        for _ in 0..12 {
            s.ingest(&v1(0.0), &v1(0.0), &v1(0.0)).unwrap();
        }
        s.ingest(&v1(1.1f64.sqrt()), &v1(0.0), &v1(0.0)).unwrap();
        assert!(s.doubling_due(10));
        let mut small = DesignState::new(1, 1, 1.0).unwrap();
        for _ in 0..12 {
            small.ingest(&v1(0.0), &v1(0.0), &v1(0.0)).unwrap();
        }
        small.ingest(&v1(0.5f64.sqrt()), &v1(0.0), &v1(0.0)).unwrap();
        assert!(!small.doubling_due(10));
    }

    #[test]
    fn weighted_norms() {
        let theta = SystemParams::new(Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 2.0)).unwrap();
        assert!((weighted_norm_inv(&Mat::identity(2, 2), &theta).unwrap() - 5.0).abs() < 1e-15);
        assert!((weighted_norm_inv(&(Mat::identity(2, 2) * 4.0), &theta).unwrap() - 1.25).abs() < 1e-15);
        assert_eq!(weighted_norm_inv(&Mat::zeros(2, 2), &theta), Err(Error::SingularDesign));
        assert!((ellipsoid_norm(&(Mat::identity(2, 2) * 4.0), &Mat::identity(2, 1)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn norm_decreases_with_rank_one_update() {
        let mut rng = crate::SimRng::seed_from_u64(9);
        for _ in 0..50 {
            let m = Mat::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let v0 = &m * m.transpose() + Mat::identity(4, 4);
            let z = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v1 = &v0 + &z * z.transpose();
            let theta = SystemParams::from_theta(&Mat::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0)), 3).unwrap();
            let n0 = weighted_norm_inv(&v0, &theta).unwrap();
            let n1 = weighted_norm_inv(&v1, &theta).unwrap();
            // Sherman-Morrison: V1^{-1} = V0^{-1} - V0^{-1} z z^T V0^{-1} / (1 + z^T V0^{-1} z).
            let v0i = v0.clone().try_inverse().unwrap();
            let w = &v0i * &z;
            let v1i = &v0i - &w * w.transpose() / (1.0 + z.dot(&w));
            let oracle = (theta.theta().transpose() * v1i * theta.theta()).trace();
            assert!(n1 <= n0 + 1e-12);
            assert!((n1 - oracle).abs() <= 1e-10 * oracle);
        }
    }

    #[test]
    fn consistent_under_stabilizing_feedback() {
        let mut rng = crate::SimRng::seed_from_u64(21);
        let a = Mat::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.7]);
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let k = Mat::from_row_slice(1, 2, &[0.1, 0.3]);
        let mut s = DesignState::new(2, 1, 1e-4).unwrap();
        let mut x = Vector::zeros(2);
        for _ in 0..10_000 {
            let dither: f64 = rng.sample(StandardNormal);
            let u = -(&k * &x) + Vector::from_element(1, dither);
            let w = Vector::from_fn(2, |_, _| rng.sample(StandardNormal));
            let next = &a * &x + &b * &u + w;
            s.ingest(&x, &u, &next).unwrap();
            x = next;
        }
        let est = s.rls_estimate(1.0, 0.05, 10.0).unwrap();
        let truth = SystemParams::new(a, b).unwrap().theta();
        assert!((est.theta_hat.theta() - truth).norm() <= 0.05);
    }
}
