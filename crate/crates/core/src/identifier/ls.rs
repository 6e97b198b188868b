//! Weighted least squares with forgetting, for models linear in `theta`.
//!
//! Memory `xi = (xi1, xi2)` accumulates the discounted Gram matrix and the
//! discounted cross term:
//!
//! ```text
//! xi1+ = mu xi1 + Sigma(eta)        Sigma  ~ sigma sigma^T   (norm-clamped)
//! xi2+ = mu xi2 + lambda(eta, u)    lambda ~ sigma u^T       (norm-clamped)
//! theta+ = clamp((xi1+ + Omega)^+ xi2+)
//! ```
//!
//! With the clamps inactive, `theta` after `j` updates is the minimizer of
//! `sum_i mu^{j-i-1} |u_i - theta^T sigma_i|^2 + theta^T Omega theta`.

use crate::error::{invalid_config, Result};
use crate::numerics::{min_nonzero_singular_value, symmetric_pseudoinverse, Matrix, Vector, DEFAULT_CUTOFF_REL};

use super::{Identifier, IdentifierModel, LinearModel};

#[derive(Clone, Debug, PartialEq)]
pub struct LsConfig {
    /// Forgetting factor, in (0, 1).
    pub mu_f: f64,
    /// Regularization, symmetric positive semidefinite.
    pub omega: Matrix,
    pub rho_sigma: f64,
    pub rho_lambda: f64,
    pub theta_bound: f64,
    pub cutoff_rel: f64,
}

impl LsConfig {
    /// Clamp radii default to 1e6, cutoff to [`DEFAULT_CUTOFF_REL`].
    pub fn new(mu_f: f64, omega: Matrix) -> Self {
        Self { mu_f, omega, rho_sigma: 1e6, rho_lambda: 1e6, theta_bound: 1e6, cutoff_rel: DEFAULT_CUTOFF_REL }
    }

    pub fn diagonal(mu_f: f64, omega_scale: f64, d_sigma: usize) -> Self {
        Self::new(mu_f, Matrix::from_diagonal_element(d_sigma, d_sigma, omega_scale))
    }

    pub fn validate(&self, d_sigma: usize) -> Result<()> {
        if !(self.mu_f > 0.0 && self.mu_f < 1.0) {
            return Err(invalid_config(format!("forgetting factor must lie in (0, 1), got {}", self.mu_f)));
        }
        if self.omega.shape() != (d_sigma, d_sigma) {
            return Err(invalid_config(format!("Omega must be {d_sigma}x{d_sigma}")));
        }
        if (&self.omega - self.omega.transpose()).amax() > 1e-12 * self.omega.amax().max(1.0) {
            return Err(invalid_config("Omega must be symmetric"));
        }
        if self.omega.clone().symmetric_eigenvalues().iter().any(|&l| l < -1e-12) {
            return Err(invalid_config("Omega must be positive semidefinite"));
        }
        for (name, v) in [("rho_sigma", self.rho_sigma), ("rho_lambda", self.rho_lambda), ("theta_bound", self.theta_bound)] {
            if !(v > 0.0) {
                return Err(invalid_config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.cutoff_rel > 0.0 && self.cutoff_rel < 1.0) {
            return Err(invalid_config("cutoff_rel must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Returns whether the clamp engaged.
fn clamp_norm(m: &mut Matrix, radius: f64) -> bool {
    let n = m.norm();
    if n > radius {
        m.scale_mut(radius / n);
        return true;
    }
    false
}

/// `(xi1 + Omega)^+ xi2`, columnwise norm-clamped at `theta_bound`.
///
/// `omega_floor` is a lower bound on the eigenvalues of `Omega`. When it
/// exceeds `cutoff_rel * trace(xi1 + Omega)`, no eigenvalue can fall below
/// the pseudoinverse cutoff, the pseudoinverse is the inverse and a Cholesky
/// solve is used instead of the eigendecomposition.
fn theta_map_columns(
    xi1: &Matrix,
    xi2: &Matrix,
    omega: &Matrix,
    omega_floor: Option<f64>,
    theta_bound: f64,
    cutoff_rel: f64,
) -> Result<Matrix> {
    let gram = xi1 + omega;
    let fast = match omega_floor {
        Some(floor) if floor > cutoff_rel * gram.trace() => gram.clone().cholesky().map(|c| c.solve(xi2)),
        _ => None,
    };
    let mut theta = match fast {
        Some(theta) => theta,
        None => symmetric_pseudoinverse(&gram, cutoff_rel)? * xi2,
    };
    for mut col in theta.column_iter_mut() {
        let n = col.norm();
        if n > theta_bound {
            col.scale_mut(theta_bound / n);
        }
    }
    Ok(theta)
}

/// Output map of the least-squares identifier for one output channel.
pub fn theta_map_ls(xi1: &Matrix, xi2: &Vector, omega: &Matrix, theta_bound: f64, cutoff_rel: f64) -> Result<Vector> {
    let cols = Matrix::from_column_slice(xi2.len(), 1, xi2.as_slice());
    Ok(theta_map_columns(xi1, &cols, omega, None, theta_bound, cutoff_rel)?.column(0).into_owned())
}

/// `msv(Omega + sum_i mu^{j-i-1} sigma_i sigma_i^T)` over regressor samples.
pub fn pe_margin(samples: &[Vector], mu_f: f64, omega: &Matrix, cutoff_rel: f64) -> Result<f64> {
    let mut gram = Matrix::zeros(omega.nrows(), omega.ncols());
    for s in samples {
        gram *= mu_f;
        gram.ger(1.0, s, s, 1.0);
    }
    min_nonzero_singular_value(&(gram + omega), cutoff_rel)
}

/// Persistence-of-excitation test: margin at least `epsilon`.
pub fn pe_check(samples: &[Vector], mu_f: f64, omega: &Matrix, epsilon: f64, cutoff_rel: f64) -> Result<bool> {
    Ok(pe_margin(samples, mu_f, omega, cutoff_rel)? >= epsilon)
}

/// Least-squares identifier state. Multivariable outputs are handled as
/// `d_y` scalar identifiers sharing the regressor, hence one `xi1` and one
/// column of `xi2` per channel.
#[derive(Clone, Debug)]
pub struct LsIdentifier {
    model: LinearModel,
    config: LsConfig,
    xi1: Matrix,
    xi2: Matrix,
    theta: Vector,
    omega_floor: f64,
    clamp_events: usize,
}

impl LsIdentifier {
    pub fn new(model: LinearModel, config: LsConfig) -> Result<Self> {
        let d_sigma = model.regressor().len();
        config.validate(d_sigma)?;
        let d_y = model.d_y();
        let omega_floor = config.omega.clone().symmetric_eigenvalues().min();
        Ok(Self {
            omega_floor,
            clamp_events: 0,
            theta: Vector::zeros(d_sigma * d_y),
            xi1: Matrix::zeros(d_sigma, d_sigma),
            xi2: Matrix::zeros(d_sigma, d_y),
            model,
            config,
        })
    }

    /// Replace the memory and recompute `theta` from it.
    pub fn with_memory(mut self, xi1: Matrix, xi2: Matrix) -> Result<Self> {
        if xi1.shape() != self.xi1.shape() || xi2.shape() != self.xi2.shape() {
            return Err(invalid_config("memory shape does not match the regressor"));
        }
        let asym = (&xi1 - xi1.transpose()).amax();
        if asym > 1e-12 * xi1.amax().max(1.0) || xi1.clone().symmetric_eigenvalues().min() < -1e-12 * xi1.amax().max(1.0) {
            return Err(invalid_config("xi1 must be symmetric positive semidefinite"));
        }
        self.xi1 = xi1;
        self.xi2 = xi2;
        self.refresh_theta()?;
        Ok(self)
    }

    pub fn config(&self) -> &LsConfig {
        &self.config
    }

    pub fn linear_model(&self) -> &LinearModel {
        &self.model
    }

    pub fn xi1(&self) -> &Matrix {
        &self.xi1
    }

    pub fn xi2(&self) -> &Matrix {
        &self.xi2
    }

    /// `|xi1 - xi1'| + |xi2 - xi2'|` (Frobenius).
    pub fn xi_distance(&self, other: &Self) -> f64 {
        (&self.xi1 - &other.xi1).norm() + (&self.xi2 - &other.xi2).norm()
    }

    fn refresh_theta(&mut self) -> Result<()> {
        let c = &self.config;
        let theta = theta_map_columns(&self.xi1, &self.xi2, &c.omega, Some(self.omega_floor), c.theta_bound, c.cutoff_rel)?;
        self.theta = Vector::from_column_slice(theta.as_slice());
        Ok(())
    }

    /// One identifier update in place.
    pub fn update(&mut self, eta_in: &Vector, u_out: &Vector) -> Result<()> {
        let sigma = self.model.regressor().eval(eta_in);
        let mut gram = &sigma * sigma.transpose();
        let mut clamped = clamp_norm(&mut gram, self.config.rho_sigma);
        let mut cross = &sigma * u_out.transpose();
        clamped |= clamp_norm(&mut cross, self.config.rho_lambda);
        let mu = self.config.mu_f;
        self.xi1 = &self.xi1 * mu + gram;
        self.xi1 = (&self.xi1 + self.xi1.transpose()) * 0.5;
        self.xi2 = &self.xi2 * mu + cross;
        self.refresh_theta()?;
        let c = &self.config;
        clamped |= Matrix::from_column_slice(self.xi2.nrows(), self.xi2.ncols(), self.theta.as_slice())
            .column_iter()
            .any(|col| col.norm() >= c.theta_bound * (1.0 - 1e-12));
        self.clamp_events += usize::from(clamped);
        Ok(())
    }
}

/// Functional form of [`LsIdentifier::update`].
pub fn ls_jump(state: &LsIdentifier, eta_in: &Vector, u_out: &Vector) -> Result<LsIdentifier> {
    let mut next = state.clone();
    next.update(eta_in, u_out)?;
    Ok(next)
}

impl Identifier for LsIdentifier {
    fn jump(&mut self, eta_in: &Vector, u_out: &Vector) -> Result<()> {
        self.update(eta_in, u_out)
    }

    fn theta(&self) -> &Vector {
        &self.theta
    }

    fn model(&self) -> &dyn IdentifierModel {
        &self.model
    }

    fn memory(&self) -> Vector {
        Vector::from_iterator(self.xi1.len() + self.xi2.len(), self.xi1.iter().chain(self.xi2.iter()).copied())
    }

    fn clamp_events(&self) -> usize {
        self.clamp_events
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::identifier::{build_poly_regressor, Regressor, RegressorMode};
    use crate::numerics::pseudoinverse;

    fn scalar_model() -> LinearModel {
        LinearModel::new(Arc::new(build_poly_regressor(1, 1, RegressorMode::FullMultiset).unwrap()), 1)
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn first_sample_then_regularized_estimate() {
        let cfg = LsConfig::diagonal(0.99, 0.001, 1);
        let id = LsIdentifier::new(scalar_model(), cfg).unwrap();
        let next = ls_jump(&id, &v(&[1.0]), &v(&[2.0])).unwrap();
        assert_eq!(next.xi1()[(0, 0)], 1.0);
        assert_eq!(next.xi2()[(0, 0)], 2.0);
        assert!((next.theta()[0] - 2.0 / 1.001).abs() < 1e-15);
        assert!((next.theta()[0] - 1.998_001_998_001_998).abs() < 1e-12);
    }

    #[test]
    fn identical_streams_stay_identical() {
        let cfg = LsConfig::diagonal(0.9, 0.01, 1);
        let mut a = LsIdentifier::new(scalar_model(), cfg.clone()).unwrap();
        let mut b = LsIdentifier::new(scalar_model(), cfg).unwrap();
        for k in 0..30 {
            let s = v(&[(k as f64 * 0.37).sin()]);
            let u = v(&[(k as f64 * 0.11).cos()]);
            a.jump(&s, &u).unwrap();
            b.jump(&s, &u).unwrap();
        }
        assert_eq!(a.theta(), b.theta());
        assert_eq!(a.memory(), b.memory());
    }

    #[test]
    fn theta_map_examples() {
        let id2 = Matrix::identity(2, 2);
        let zero2 = Matrix::zeros(2, 2);
        assert_eq!(theta_map_ls(&id2, &v(&[1.0, 0.0]), &zero2, 10.0, 1e-12).unwrap(), v(&[1.0, 0.0]));
        let xi1 = Matrix::from_diagonal(&v(&[2.0, 0.0]));
        let theta = theta_map_ls(&xi1, &v(&[4.0, 7.0]), &zero2, 10.0, 1e-12).unwrap();
        assert!((theta - v(&[2.0, 0.0])).norm() < 1e-14);
        let huge = theta_map_ls(&Matrix::identity(2, 2), &v(&[1e9, -1e9]), &zero2, 10.0, 1e-12).unwrap();
        assert!((huge.norm() - 10.0).abs() < 1e-9);
        let degenerate = theta_map_ls(&zero2, &v(&[1e9, 1e9]), &zero2, 10.0, 1e-12).unwrap();
        assert!(degenerate.norm() <= 10.0);
    }

    #[test]
    fn pe_check_cases() {
        let omega = Matrix::from_diagonal_element(3, 3, 1e-3);
        let samples: Vec<Vector> = (0..5).map(|k| v(&[k as f64, 0.0, 1.0])).collect();
        assert!(pe_check(&samples, 0.99, &omega, 1e-3 * (1.0 - 1e-12), 1e-12).unwrap());
        // rank one Gram: the only nonzero singular value is sum mu^k
        let e1: Vec<Vector> = (0..4).map(|_| v(&[1.0, 0.0])).collect();
        let margin = pe_margin(&e1, 0.5, &Matrix::zeros(2, 2), 1e-12).unwrap();
        assert!((margin - (1.0 + 0.5 + 0.25 + 0.125)).abs() < 1e-14);
        assert!(pe_check(&e1, 0.5, &Matrix::zeros(2, 2), 0.5, 1e-12).unwrap());
        let zeros: Vec<Vector> = (0..4).map(|_| v(&[0.0, 0.0])).collect();
        assert!(!pe_check(&zeros, 0.5, &Matrix::zeros(2, 2), 1e-9, 1e-12).unwrap());
    }

    #[test]
    fn clamps_bound_the_accumulated_memory() {
        let mut cfg = LsConfig::diagonal(0.5, 1e-3, 1);
        cfg.rho_sigma = 4.0;
        cfg.rho_lambda = 3.0;
        let mut id = LsIdentifier::new(scalar_model(), cfg).unwrap();
        for _ in 0..100 {
            id.jump(&v(&[1e3]), &v(&[1e3])).unwrap();
        }
        assert!(id.xi1().norm() <= 4.0 / (1.0 - 0.5) + 1e-9);
        assert!(id.xi2().norm() <= 3.0 / (1.0 - 0.5) + 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(LsConfig::diagonal(1.0, 1e-3, 2).validate(2).is_err());
        assert!(LsConfig::diagonal(0.9, -1.0, 2).validate(2).is_err());
        assert!(LsConfig::diagonal(0.9, 1e-3, 2).validate(3).is_err());
        assert!(LsConfig::diagonal(0.9, 0.0, 2).validate(2).is_ok());
    }

    #[test]
    fn symmetric_and_svd_theta_routes_agree() {
        let reg = Arc::new(build_poly_regressor(3, 3, RegressorMode::FullMultiset).unwrap());
        let model = LinearModel::new(reg.clone(), 1);
        let mut id = LsIdentifier::new(model, LsConfig::diagonal(0.95, 1e-3, reg.len())).unwrap();
        for k in 0..40 {
            let t = k as f64 * 0.3;
            id.jump(&v(&[t.sin(), (1.3 * t).cos(), 0.5 * t.sin() * t.cos()]), &v(&[t.cos()])).unwrap();
        }
        let omega = &id.config().omega;
        let svd_route = pseudoinverse(&(id.xi1() + omega), 1e-12).unwrap() * id.xi2().column(0);
        let rel = (&svd_route - id.theta()).norm() / (1.0 + svd_route.norm());
        assert!(rel < 1e-9, "{rel}");
    }
}
