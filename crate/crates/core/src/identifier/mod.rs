//! Discrete-time identifiers.
//!
//! An identifier is updated only at clock ticks, with the internal-model
//! state `eta` standing in for the unmeasured input sample and the control
//! `u` for the output sample. It exposes a parameter `theta` selecting the
//! model `gamma_hat(theta, .)` used by the observer's consistency term.

use std::sync::Arc;

use crate::error::Result;
use crate::numerics::{Matrix, Vector};

mod ls;
mod minibatch;
mod regressor;

pub use ls::{ls_jump, pe_check, pe_margin, theta_map_ls, LsConfig, LsIdentifier};
pub use minibatch::{batch_solver_ls, mb_jump, BatchFit, BatchSolver, MiniBatchIdentifier, RidgeBatchSolver};
pub use regressor::{build_poly_regressor, PolyRegressor, Regressor, RegressorMode};

/// A parametrized model set `{ gamma_hat(theta, .) }`.
pub trait IdentifierModel: Send + Sync + std::fmt::Debug {
    fn d_theta(&self) -> usize;
    fn d_eta(&self) -> usize;
    fn d_y(&self) -> usize;
    fn gamma_hat(&self, theta: &Vector, eta: &Vector) -> Vector;
    /// `d gamma_hat / d eta`, shape `d_y x d_eta`.
    fn dgamma_deta(&self, theta: &Vector, eta: &Vector) -> Matrix;
    /// `(d gamma_hat / d eta) v`.
    fn dgamma_along(&self, theta: &Vector, eta: &Vector, v: &Vector) -> Vector {
        self.dgamma_deta(theta, eta) * v
    }
}

/// `gamma_hat(theta, eta) = Theta^T sigma(eta)`, with `theta` holding the
/// columns of `Theta` (one per output channel) stacked.
#[derive(Clone, Debug)]
pub struct LinearModel {
    regressor: Arc<dyn Regressor>,
    d_y: usize,
}

impl LinearModel {
    pub fn new(regressor: Arc<dyn Regressor>, d_y: usize) -> Self {
        Self { regressor, d_y }
    }

    pub fn regressor(&self) -> &Arc<dyn Regressor> {
        &self.regressor
    }

    /// View `theta` as the `d_sigma x d_y` coefficient matrix.
    pub fn coefficients(&self, theta: &Vector) -> Matrix {
        Matrix::from_column_slice(self.regressor.len(), self.d_y, theta.as_slice())
    }
}

impl IdentifierModel for LinearModel {
    fn d_theta(&self) -> usize {
        self.regressor.len() * self.d_y
    }

    fn d_eta(&self) -> usize {
        self.regressor.d_in()
    }

    fn d_y(&self) -> usize {
        self.d_y
    }

    fn gamma_hat(&self, theta: &Vector, eta: &Vector) -> Vector {
        self.coefficients(theta).tr_mul(&self.regressor.eval(eta))
    }

    fn dgamma_deta(&self, theta: &Vector, eta: &Vector) -> Matrix {
        self.coefficients(theta).tr_mul(&self.regressor.jacobian(eta))
    }

    fn dgamma_along(&self, theta: &Vector, eta: &Vector, v: &Vector) -> Vector {
        self.coefficients(theta).tr_mul(&self.regressor.directional(eta, v))
    }
}

/// Common interface of the discrete-time identifiers.
pub trait Identifier: Send {
    /// Update with the input/output sample taken at a clock tick.
    fn jump(&mut self, eta_in: &Vector, u_out: &Vector) -> Result<()>;
    fn theta(&self) -> &Vector;
    fn model(&self) -> &dyn IdentifierModel;
    /// Internal memory `xi`, flattened.
    fn memory(&self) -> Vector;
    /// Number of updates in which a saturation of the update or output map engaged.
    fn clamp_events(&self) -> usize {
        0
    }
}

/// `u*(w) - gamma_hat(theta, tau(w))`.
pub fn prediction_error(model: &dyn IdentifierModel, theta: &Vector, tau_w: &Vector, ustar_w: &Vector) -> Vector {
    ustar_w - model.gamma_hat(theta, tau_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear6() -> LinearModel {
        LinearModel::new(Arc::new(build_poly_regressor(6, 1, RegressorMode::FullMultiset).unwrap()), 1)
    }

    #[test]
    fn prediction_error_cases() {
        let model = linear6();
        let tau = Vector::from_vec(vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0]);
        let truth = Vector::from_vec(vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        let ustar = model.gamma_hat(&truth, &tau);
        assert!(prediction_error(&model, &truth, &tau, &ustar).norm() < 1e-15);
        assert_eq!(prediction_error(&model, &Vector::zeros(6), &tau, &ustar), ustar);
        let delta = Vector::from_vec(vec![0.01, 0.0, -0.02, 0.0, 0.03, 0.0]);
        let eps = prediction_error(&model, &(&truth + &delta), &tau, &ustar);
        assert!((eps[0] + delta.dot(&tau)).abs() < 1e-14);
    }

    #[test]
    fn multichannel_linear_model_stacks_columns() {
        let reg = Arc::new(build_poly_regressor(2, 1, RegressorMode::FullMultiset).unwrap());
        let model = LinearModel::new(reg, 2);
        let theta = Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let g = model.gamma_hat(&theta, &Vector::from_vec(vec![1.0, 1.0]));
        assert_eq!(g.as_slice(), &[3.0, 7.0]);
        let jac = model.dgamma_deta(&theta, &Vector::zeros(2));
        assert_eq!(jac, Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }
}
