//! Continuous-time part of the regulator: saturated stabilizer, internal
//! model unit and extended high-gain observer with its consistency term.
//!
//! ```text
//! eta'     = F eta + G u
//! x_hat'   = A x_hat + B (sigma_hat + b_bar u) + Lambda(l) H (y - x_hat_1)
//! sigma_hat' = -b_bar psi(theta, eta, u) + l^{r+1} H_{r+1} (y - x_hat_1)
//! u        = b_bar^{-1} sat(-sigma_hat - K x_hat)
//! ```
//!
//! At clock ticks `(eta, x_hat, sigma_hat)` are held and only the identifier
//! and the clock change.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, Result};
use crate::identifier::IdentifierModel;
use crate::numerics::{eigenvalues, is_controllable, is_hurwitz, monic_roots, spectral_norm, Matrix, Vector};
use crate::plant::build_chain_matrices;

/// Norm clamp: identity on the closed ball of radius `level`, radial
/// projection outside. Bounded by `level` and 1-Lipschitz.
pub fn saturate(s: &Vector, level: f64) -> Vector {
    let n = s.norm();
    if n <= level {
        s.clone()
    } else {
        s * (level / n)
    }
}

/// Conservative saturation level `bound_c + bound_bk + rho2`, where the two
/// bounds dominate `|b_bar c|` and `|b_bar b^{-1} kappa|` on the region of
/// interest.
pub fn compute_sat_level(bound_c: f64, bound_bk: f64, rho2: f64) -> f64 {
    bound_c + bound_bk + rho2
}

/// Linear stabilizer `kappa(x) = -K x` followed by the saturation.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerConfig {
    pub k: Matrix,
    pub sat_level: f64,
    pub b_bar_inv: Matrix,
}

impl StabilizerConfig {
    /// Checks that `A - B K` is Hurwitz for the chain of `r` integrators.
    pub fn new(k: Matrix, sat_level: f64, b_bar: &Matrix, r: usize) -> Result<Self> {
        let d_y = b_bar.nrows();
        if !b_bar.is_square() || d_y == 0 {
            return Err(invalid_config("b_bar must be a nonempty square matrix"));
        }
        if k.shape() != (d_y, r * d_y) {
            return Err(invalid_config(format!("K must be {}x{}, got {}x{}", d_y, r * d_y, k.nrows(), k.ncols())));
        }
        if !(sat_level > 0.0) {
            return Err(invalid_config(format!("saturation level must be positive, got {sat_level}")));
        }
        let (a, b, _) = build_chain_matrices(r, d_y);
        if !is_hurwitz(&(a - b * &k))? {
            return Err(invalid_config("A - B K is not Hurwitz"));
        }
        let b_bar_inv = b_bar.clone().try_inverse().ok_or_else(|| invalid_config("b_bar is singular"))?;
        Ok(Self { k, sat_level, b_bar_inv })
    }

    /// `|b_bar^{-1}| M`: no control sample can exceed it.
    pub fn control_bound(&self) -> f64 {
        spectral_norm(&self.b_bar_inv).expect("b_bar_inv is finite") * self.sat_level
    }
}

/// `u = b_bar^{-1} sat(-sigma_hat - K x_hat)`.
pub fn control_output(x_hat: &Vector, sigma_hat: &Vector, stab: &StabilizerConfig) -> Vector {
    let raw = -sigma_hat - &stab.k * x_hat;
    &stab.b_bar_inv * saturate(&raw, stab.sat_level)
}

/// `d_eta = 2 (d_w + d_z + 1)`.
pub fn default_internal_model_dim(d_w: usize, d_z: usize) -> usize {
    2 * (d_w + d_z + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InternalModelConfig {
    pub f: Matrix,
    pub g: Matrix,
}

impl InternalModelConfig {
    /// Checks `F` Hurwitz and `(F, G)` controllable.
    pub fn new(f: Matrix, g: Matrix) -> Result<Self> {
        if !f.is_square() || g.nrows() != f.nrows() {
            return Err(invalid_config(format!(
                "F must be square with as many rows as G (F {}x{}, G {}x{})",
                f.nrows(),
                f.ncols(),
                g.nrows(),
                g.ncols()
            )));
        }
        if !is_hurwitz(&f)? {
            return Err(invalid_config("internal model F is not Hurwitz"));
        }
        if !is_controllable(&f, &g)? {
            return Err(invalid_config("internal model pair (F, G) is not controllable"));
        }
        Ok(Self { f, g })
    }

    /// Bidiagonal `F` (-1 on the diagonal, 1 above it) and `G` selecting the
    /// last `d_y` states.
    pub fn bidiagonal(d_eta: usize, d_y: usize) -> Result<Self> {
        if d_y == 0 || d_eta < d_y {
            return Err(invalid_config(format!("cannot build a {d_eta}-dimensional internal model for {d_y} outputs")));
        }
        let mut f = Matrix::from_diagonal_element(d_eta, d_eta, -1.0);
        for i in 0..d_eta - 1 {
            f[(i, i + 1)] = 1.0;
        }
        let mut g = Matrix::zeros(d_eta, d_y);
        for k in 0..d_y {
            g[(d_eta - d_y + k, k)] = 1.0;
        }
        Self::new(f, g)
    }

    pub fn d_eta(&self) -> usize {
        self.f.nrows()
    }
}

/// `F eta + G u`.
pub fn internal_model_flow(eta: &Vector, u: &Vector, im: &InternalModelConfig) -> Vector {
    &im.f * eta + &im.g * u
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub ell: f64,
    /// One list `(h_1, ..., h_{r+1})` per output channel.
    pub h_coeffs: Vec<Vec<f64>>,
    pub psi_bar: f64,
}

/// `Lambda(l) = diag(l I, ..., l^r I)`, the stacked `H = (H_1; ...; H_r)`,
/// `H_{r+1}` and the scalar `l^{r+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverGains {
    pub lambda: Matrix,
    pub h: Matrix,
    pub h_last: Matrix,
    pub ell_top: f64,
    /// Precomputed `Lambda(l) H`.
    pub lambda_h: Matrix,
}

/// Imaginary parts below this (relative) count as zero in the root check;
/// repeated real roots come out of the companion matrix with O(eps^{1/m}) noise.
const ROOT_IMAG_TOLERANCE: f64 = 1e-4;

pub fn build_observer_gains(obs: &ObserverConfig, r: usize, d_y: usize) -> Result<ObserverGains> {
    if !(obs.ell >= 1.0 && obs.ell.is_finite()) {
        return Err(invalid_config(format!("observer gain l must be >= 1, got {}", obs.ell)));
    }
    if !(obs.psi_bar > 0.0) {
        return Err(invalid_config(format!("psi_bar must be positive, got {}", obs.psi_bar)));
    }
    if obs.h_coeffs.len() != d_y {
        return Err(invalid_config(format!("expected {d_y} coefficient lists, got {}", obs.h_coeffs.len())));
    }
    for (ch, h) in obs.h_coeffs.iter().enumerate() {
        if h.len() != r + 1 {
            return Err(invalid_config(format!("channel {ch}: expected {} coefficients, got {}", r + 1, h.len())));
        }
        let roots = monic_roots(h)?;
        if let Some(bad) = roots.iter().find(|z| z.re >= 0.0 || z.im.abs() > ROOT_IMAG_TOLERANCE * (1.0 + z.norm())) {
            return Err(invalid_config(format!(
                "channel {ch}: observer polynomial has root {} + {}i, roots must be real and negative",
                bad.re, bad.im
            )));
        }
    }
    let d_x = r * d_y;
    let mut lambda = Matrix::zeros(d_x, d_x);
    let mut h = Matrix::zeros(d_x, d_y);
    for i in 0..r {
        let scale = obs.ell.powi(i as i32 + 1);
        for ch in 0..d_y {
            lambda[(i * d_y + ch, i * d_y + ch)] = scale;
            h[(i * d_y + ch, ch)] = obs.h_coeffs[ch][i];
        }
    }
    let h_last = Matrix::from_diagonal(&Vector::from_iterator(d_y, obs.h_coeffs.iter().map(|c| c[r])));
    let lambda_h = &lambda * &h;
    Ok(ObserverGains { lambda, h, h_last, ell_top: obs.ell.powi(r as i32 + 1), lambda_h })
}

/// Characteristic roots of each channel's observer polynomial.
pub fn observer_roots(obs: &ObserverConfig) -> Result<Vec<Vec<nalgebra::Complex<f64>>>> {
    obs.h_coeffs.iter().map(|h| monic_roots(h)).collect()
}

/// `sat((d gamma_hat / d eta)(theta, eta) (F eta + G u), psi_bar)`.
pub fn psi_consistency(
    theta: &Vector,
    eta: &Vector,
    u: &Vector,
    model: &dyn IdentifierModel,
    im: &InternalModelConfig,
    psi_bar: f64,
) -> Vector {
    let direction = internal_model_flow(eta, u, im);
    saturate(&model.dgamma_along(theta, eta, &direction), psi_bar)
}

/// Observer data needed by [`observer_flow`].
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverStructure {
    pub a: Matrix,
    pub b: Matrix,
    pub b_bar: Matrix,
    pub gains: ObserverGains,
}

impl ObserverStructure {
    pub fn new(r: usize, b_bar: Matrix, gains: ObserverGains) -> Self {
        let (a, b, _) = build_chain_matrices(r, b_bar.nrows());
        Self { a, b, b_bar, gains }
    }
}

/// `(x_hat', sigma_hat')` for output `y`, control `u` and consistency term `psi`.
pub fn observer_flow(
    x_hat: &Vector,
    sigma_hat: &Vector,
    y: &Vector,
    u: &Vector,
    psi: &Vector,
    obs: &ObserverStructure,
) -> (Vector, Vector) {
    let d_y = y.len();
    let innovation = y - x_hat.rows(0, d_y);
    let b_bar_u = &obs.b_bar * u;
    let x_hat_dot = &obs.a * x_hat + &obs.b * (sigma_hat + &b_bar_u) + &obs.gains.lambda_h * &innovation;
    let sigma_hat_dot = -(&obs.b_bar * psi) + &obs.gains.h_last * &innovation * obs.gains.ell_top;
    (x_hat_dot, sigma_hat_dot)
}

/// Continuous regulator state plus the clock and the current parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct RegulatorState {
    pub varsigma: f64,
    pub eta: Vector,
    pub x_hat: Vector,
    pub sigma_hat: Vector,
    pub theta: Vector,
}

impl RegulatorState {
    pub fn zeros(d_eta: usize, d_x: usize, d_y: usize, d_theta: usize) -> Self {
        Self {
            varsigma: 0.0,
            eta: Vector::zeros(d_eta),
            x_hat: Vector::zeros(d_x),
            sigma_hat: Vector::zeros(d_y),
            theta: Vector::zeros(d_theta),
        }
    }

    /// Jump of the continuous part: the clock resets, the rest is held.
    /// The identifier supplies the new `theta`.
    pub fn jump(&self, theta: Vector) -> Self {
        Self { varsigma: 0.0, eta: self.eta.clone(), x_hat: self.x_hat.clone(), sigma_hat: self.sigma_hat.clone(), theta }
    }
}

/// Eigenvalues of `A - B K` for diagnostics.
pub fn closed_loop_poles(k: &Matrix, r: usize, d_y: usize) -> Result<Vec<nalgebra::Complex<f64>>> {
    let (a, b, _) = build_chain_matrices(r, d_y);
    eigenvalues(&(a - b * k))
}
