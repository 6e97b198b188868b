use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, Result};
use crate::numerics::{Matrix, Vector};

/// A differentiable feature map `sigma: R^{d_in} -> R^{len}`.
pub trait Regressor: Send + Sync + std::fmt::Debug {
    fn d_in(&self) -> usize;
    fn len(&self) -> usize;
    fn eval(&self, eta: &Vector) -> Vector;
    /// `d sigma / d eta`, shape `len x d_in`.
    fn jacobian(&self, eta: &Vector) -> Matrix;
    /// `(d sigma / d eta) v` without forming the Jacobian.
    fn directional(&self, eta: &Vector, v: &Vector) -> Vector {
        self.jacobian(eta) * v
    }
}

/// Which odd-order monomials enter the expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorMode {
    /// Every non-decreasing multi-index of each odd order `n <= N`.
    #[default]
    FullMultiset,
    /// Only `eta_i^n` for each odd `n <= N`.
    PurePowers,
}

/// Odd-order polynomial regressor. Components are ordered by degree, then
/// lexicographically by multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyRegressor {
    pub d_eta: usize,
    pub max_order: usize,
    pub mode: RegressorMode,
    pub index_list: Vec<Vec<usize>>,
}

fn multisets(d: usize, n: usize, start: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    for i in start..d {
        prefix.push(i);
        multisets(d, n, i, prefix, out);
        prefix.pop();
    }
}

pub fn build_poly_regressor(d_eta: usize, max_order: usize, mode: RegressorMode) -> Result<PolyRegressor> {
    if max_order == 0 || max_order.is_multiple_of(2) {
        return Err(invalid_config(format!("polynomial order must be odd and >= 1, got {max_order}")));
    }
    if d_eta == 0 {
        return Err(invalid_config("regressor input dimension must be positive"));
    }
    let mut index_list = Vec::new();
    for n in (1..=max_order).step_by(2) {
        match mode {
            RegressorMode::FullMultiset => multisets(d_eta, n, 0, &mut Vec::with_capacity(n), &mut index_list),
            RegressorMode::PurePowers => index_list.extend((0..d_eta).map(|i| vec![i; n])),
        }
    }
    Ok(PolyRegressor { d_eta, max_order, mode, index_list })
}

impl Regressor for PolyRegressor {
    fn d_in(&self) -> usize {
        self.d_eta
    }

    fn len(&self) -> usize {
        self.index_list.len()
    }

    fn eval(&self, eta: &Vector) -> Vector {
        Vector::from_iterator(self.len(), self.index_list.iter().map(|idx| idx.iter().map(|&i| eta[i]).product::<f64>()))
    }

    fn jacobian(&self, eta: &Vector) -> Matrix {
        let mut jac = Matrix::zeros(self.len(), self.d_eta);
        for (row, idx) in self.index_list.iter().enumerate() {
            for k in 0..idx.len() {
                let rest: f64 = idx.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &i)| eta[i]).product();
                jac[(row, idx[k])] += rest;
            }
        }
        jac
    }

    fn directional(&self, eta: &Vector, v: &Vector) -> Vector {
        Vector::from_iterator(
            self.len(),
            self.index_list.iter().map(|idx| {
                (0..idx.len())
                    .map(|k| {
                        let rest: f64 = idx.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &i)| eta[i]).product();
                        v[idx[k]] * rest
                    })
                    .sum::<f64>()
            }),
        )
    }
}
