//! Moving-window ("mini-batch") identifier.
//!
//! Two shift registers hold the last `N_w` input and output samples; after
//! each update the parameter is recomputed by a batch solver run on the
//! current window.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{invalid_config, invalid_input, Result};
use crate::numerics::{pseudoinverse, Matrix, Vector, DEFAULT_CUTOFF_REL};

use super::{Identifier, IdentifierModel, Regressor};

/// A map from a full window of samples to a parameter minimizing the window cost.
pub trait BatchSolver: Send + Sync + std::fmt::Debug {
    fn solve(&self, window_in: &[Vector], window_out: &[Vector]) -> Result<Vector>;
}

/// Result of a ridge fit with its first-order optimality residual
/// `|sum_i w_i sigma_i (sigma_i^T Theta - u_i^T) + Omega Theta|`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchFit {
    pub theta: Vector,
    pub residual: f64,
}

/// Weighted ridge regression on a window:
/// `argmin sum_i w_i |u_i - Theta^T sigma(eta_i)|^2 + tr(Theta^T Omega Theta)`,
/// solved through the normal equations with a pseudoinverse (minimum-norm
/// minimizer when they are singular). `theta` stacks the columns of `Theta`.
pub fn batch_solver_ls(
    window_in: &[Vector],
    window_out: &[Vector],
    regressor: &dyn Regressor,
    omega: &Matrix,
    weights: &[f64],
    cutoff_rel: f64,
) -> Result<BatchFit> {
    if window_in.len() != window_out.len() || window_in.len() != weights.len() {
        return Err(invalid_input(format!(
            "window sizes differ: {} inputs, {} outputs, {} weights",
            window_in.len(),
            window_out.len(),
            weights.len()
        )));
    }
    let d_sigma = regressor.len();
    let d_y = window_out.first().map_or(1, |u| u.len());
    let mut normal = omega.clone();
    let mut rhs = Matrix::zeros(d_sigma, d_y);
    let sigmas: Vec<Vector> = window_in.iter().map(|eta| regressor.eval(eta)).collect();
    for ((s, u), &w) in sigmas.iter().zip(window_out).zip(weights) {
        normal.ger(w, s, s, 1.0);
        rhs.ger(w, s, u, 1.0);
    }
    let theta = pseudoinverse(&normal, cutoff_rel)? * &rhs;
    let mut gradient = omega * &theta;
    for ((s, u), &w) in sigmas.iter().zip(window_out).zip(weights) {
        let err = theta.tr_mul(s) - u;
        gradient.ger(w, s, &err, 1.0);
    }
    Ok(BatchFit { theta: Vector::from_column_slice(theta.as_slice()), residual: gradient.norm() })
}

/// [`batch_solver_ls`] packaged as a [`BatchSolver`].
#[derive(Clone, Debug)]
pub struct RidgeBatchSolver {
    pub regressor: Arc<dyn Regressor>,
    pub omega: Matrix,
    /// Per-slot weights, oldest first; empty means all ones.
    pub weights: Vec<f64>,
    pub cutoff_rel: f64,
}

impl RidgeBatchSolver {
    pub fn new(regressor: Arc<dyn Regressor>, omega: Matrix) -> Self {
        Self { regressor, omega, weights: Vec::new(), cutoff_rel: DEFAULT_CUTOFF_REL }
    }
}

impl BatchSolver for RidgeBatchSolver {
    fn solve(&self, window_in: &[Vector], window_out: &[Vector]) -> Result<Vector> {
        let ones;
        let weights = if self.weights.is_empty() {
            ones = vec![1.0; window_in.len()];
            &ones
        } else {
            &self.weights
        };
        Ok(batch_solver_ls(window_in, window_out, self.regressor.as_ref(), &self.omega, weights, self.cutoff_rel)?.theta)
    }
}

/// Shift-register identifier over a window of `capacity` samples.
#[derive(Clone, Debug)]
pub struct MiniBatchIdentifier {
    window_in: VecDeque<Vector>,
    window_out: VecDeque<Vector>,
    capacity: usize,
    fill_count: usize,
    solver: Arc<dyn BatchSolver>,
    model: Arc<dyn IdentifierModel>,
    theta: Vector,
}

impl MiniBatchIdentifier {
    /// Registers start at zero and `theta` at zero until the window is full.
    pub fn new(capacity: usize, model: Arc<dyn IdentifierModel>, solver: Arc<dyn BatchSolver>) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid_config("mini-batch window must hold at least one sample"));
        }
        let window_in = std::iter::repeat_n(Vector::zeros(model.d_eta()), capacity).collect();
        let window_out = std::iter::repeat_n(Vector::zeros(model.d_y()), capacity).collect();
        Ok(Self { window_in, window_out, capacity, fill_count: 0, theta: Vector::zeros(model.d_theta()), solver, model })
    }

    /// Overwrite the register contents (oldest first), e.g. to start two
    /// copies from different memories.
    pub fn with_registers(mut self, window_in: Vec<Vector>, window_out: Vec<Vector>) -> Result<Self> {
        if window_in.len() != self.capacity || window_out.len() != self.capacity {
            return Err(invalid_config("register length must equal the window capacity"));
        }
        self.window_in = window_in.into();
        self.window_out = window_out.into();
        Ok(self)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fill_count(&self) -> usize {
        self.fill_count
    }

    pub fn solver(&self) -> &Arc<dyn BatchSolver> {
        &self.solver
    }

    /// Register contents, oldest first.
    pub fn window(&self) -> (Vec<Vector>, Vec<Vector>) {
        (self.window_in.iter().cloned().collect(), self.window_out.iter().cloned().collect())
    }

    pub fn update(&mut self, eta_in: &Vector, u_out: &Vector) -> Result<()> {
        self.window_in.pop_front();
        self.window_in.push_back(eta_in.clone());
        self.window_out.pop_front();
        self.window_out.push_back(u_out.clone());
        self.fill_count += 1;
        if self.fill_count >= self.capacity {
            let (win, wout) = self.window();
            self.theta = self.solver.solve(&win, &wout)?;
        }
        Ok(())
    }

    /// `|xi - xi'|` summed over both registers.
    pub fn xi_distance(&self, other: &Self) -> f64 {
        let a: f64 = self.window_in.iter().zip(&other.window_in).map(|(x, y)| (x - y).norm_squared()).sum();
        let b: f64 = self.window_out.iter().zip(&other.window_out).map(|(x, y)| (x - y).norm_squared()).sum();
        a.sqrt() + b.sqrt()
    }
}

/// Functional form of [`MiniBatchIdentifier::update`].
pub fn mb_jump(state: &MiniBatchIdentifier, eta_in: &Vector, u_out: &Vector) -> Result<MiniBatchIdentifier> {
    let mut next = state.clone();
    next.update(eta_in, u_out)?;
    Ok(next)
}

impl Identifier for MiniBatchIdentifier {
    fn jump(&mut self, eta_in: &Vector, u_out: &Vector) -> Result<()> {
        self.update(eta_in, u_out)
    }

    fn theta(&self) -> &Vector {
        &self.theta
    }

    fn model(&self) -> &dyn IdentifierModel {
        self.model.as_ref()
    }

    fn memory(&self) -> Vector {
        Vector::from_iterator(
            self.capacity * (self.model.d_eta() + self.model.d_y()),
            self.window_in.iter().flat_map(|v| v.iter().copied()).chain(self.window_out.iter().flat_map(|v| v.iter().copied())),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifier::{build_poly_regressor, LinearModel, RegressorMode};

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn scalar_setup(capacity: usize, omega: f64) -> MiniBatchIdentifier {
        let reg: Arc<dyn Regressor> = Arc::new(build_poly_regressor(1, 1, RegressorMode::FullMultiset).unwrap());
        let model = Arc::new(LinearModel::new(reg.clone(), 1));
        let solver = Arc::new(RidgeBatchSolver::new(reg, Matrix::from_element(1, 1, omega)));
        MiniBatchIdentifier::new(capacity, model, solver).unwrap()
    }

    #[test]
    fn shift_register_keeps_last_samples() {
        let mut id = scalar_setup(3, 0.1);
        for k in 1..=4 {
            id = mb_jump(&id, &v(&[k as f64]), &v(&[k as f64])).unwrap();
        }
        let (_, out) = id.window();
        assert_eq!(out, vec![v(&[2.0]), v(&[3.0]), v(&[4.0])]);
        assert_eq!(id.fill_count(), 4);
    }

    #[test]
    fn theta_waits_for_a_full_window() {
        let mut id = scalar_setup(3, 0.0);
        id.jump(&v(&[1.0]), &v(&[2.0])).unwrap();
        id.jump(&v(&[2.0]), &v(&[4.0])).unwrap();
        assert_eq!(id.theta()[0], 0.0);
        id.jump(&v(&[3.0]), &v(&[6.0])).unwrap();
        assert!((id.theta()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_scalar_and_degenerate_cases() {
        let reg = build_poly_regressor(1, 1, RegressorMode::FullMultiset).unwrap();
        let fit = batch_solver_ls(&[v(&[1.0])], &[v(&[3.0])], &reg, &Matrix::from_element(1, 1, 0.5), &[1.0], 1e-12).unwrap();
        assert!((fit.theta[0] - 2.0).abs() < 1e-14);
        assert!(fit.residual < 1e-12);
        let zeros = vec![v(&[0.0]); 4];
        let fit = batch_solver_ls(&zeros, &[v(&[1.0]), v(&[2.0]), v(&[3.0]), v(&[4.0])], &reg, &Matrix::from_element(1, 1, 1e-3), &[1.0; 4], 1e-12)
            .unwrap();
        assert_eq!(fit.theta[0], 0.0);
        assert!(batch_solver_ls(&zeros, &[v(&[1.0])], &reg, &Matrix::zeros(1, 1), &[1.0], 1e-12).is_err());
    }

    #[test]
    fn distance_vanishes_after_one_full_window() {
        let a = scalar_setup(5, 1e-3);
        let mut b = scalar_setup(5, 1e-3).with_registers(vec![v(&[9.0]); 5], vec![v(&[-9.0]); 5]).unwrap();
        let mut a = a;
        assert!(a.xi_distance(&b) > 0.0);
        for k in 0..5 {
            let s = v(&[k as f64]);
            a.jump(&s, &s).unwrap();
            b.jump(&s, &s).unwrap();
        }
        assert_eq!(a.xi_distance(&b), 0.0);
        assert_eq!(a.theta(), b.theta());
    }
}
