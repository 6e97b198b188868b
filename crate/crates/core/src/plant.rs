//! Normal-form plants driven by an exosystem.
//!
//! A plant is described by the evaluators of
//!
//! ```text
//! w' = s(w)
//! z' = f(w, z, x)
//! x' = A x + B (q(w, z, x) + b(w, z, x) u),   y = C x
//! ```
//!
//! where `(A, B, C)` is a chain of `r` integrators on each of the `d_y`
//! output channels. The regulator never evaluates these functions; they
//! are only used to simulate the "true" process.
//!
//! The Van der Pol scenario tracks the distorted triangular wave
//! `p1*(w) = 2|w| asin(w1 / |w|)` generated by `w1' = w2, w2' = -rho w1`.
//! The conserved quantity of that exosystem is the quadratic form
//! `(rho w1^2 + w2^2) / 2`, see [`exo_energy`].
//!
//! Minimum-phase (ISS) properties of the zero dynamics are not checked;
//! the Van der Pol plant has no `z` state.

use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::numerics::{Matrix, Vector};

/// Relative tolerance on `|w2| / |w|` below which the reference is at a peak.
pub const BRANCH_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlantDims {
    pub d_w: usize,
    pub d_z: usize,
    pub d_y: usize,
    pub r: usize,
}

impl PlantDims {
    pub fn d_x(&self) -> usize {
        self.r * self.d_y
    }
}

/// Evaluators of a plant in normal form together with its exosystem.
pub trait NormalFormPlant: Send + Sync {
    fn dims(&self) -> PlantDims;

    /// Exosystem vector field `s(w)`.
    fn exo_field(&self, w: &Vector) -> Vector;

    /// Zero dynamics `f(w, z, x)`. Plants without `z` keep the default.
    fn zero_dynamics(&self, _w: &Vector, _z: &Vector, _x: &Vector) -> Vector {
        Vector::zeros(0)
    }

    fn q(&self, w: &Vector, z: &Vector, x: &Vector) -> Vector;

    fn b(&self, w: &Vector, z: &Vector, x: &Vector) -> Matrix;

    /// Known nominal value of `b`.
    fn b_bar(&self) -> Matrix;

    /// Margin `mu` with `|(b - b_bar) b_bar^{-1}| <= 1 - mu`.
    fn mu_b(&self) -> f64;

    /// Ideal steady-state input `u*(w)`, when it is known in closed form.
    fn ideal_feedforward(&self, _w: &Vector) -> Option<Vector> {
        None
    }
}

/// Check the static plant invariants: `b_bar` nonsingular, `mu_b` in (0, 1)
/// and `|(b - b_bar) b_bar^{-1}| <= 1 - mu_b` at each `(w, z, x)` test point
/// (spectral norm).
pub fn validate_plant(plant: &dyn NormalFormPlant, test_points: &[(Vector, Vector, Vector)]) -> Result<()> {
    let dims = plant.dims();
    if dims.r == 0 || dims.d_y == 0 {
        return Err(invalid_config("plant needs r >= 1 and d_y >= 1"));
    }
    let b_bar = plant.b_bar();
    if b_bar.shape() != (dims.d_y, dims.d_y) {
        return Err(invalid_config(format!("b_bar must be {0}x{0}", dims.d_y)));
    }
    let b_bar_inv = b_bar
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| invalid_config("b_bar is singular"))?;
    let mu = plant.mu_b();
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid_config(format!("mu_b must lie in (0, 1), got {mu}")));
    }
    for (w, z, x) in test_points {
        let mismatch = (plant.b(w, z, x) - &b_bar) * &b_bar_inv;
        let norm = crate::numerics::spectral_norm(&mismatch)?;
        if norm > 1.0 - mu + 1e-12 {
            return Err(invalid_config(format!(
                "|(b - b_bar) b_bar^-1| = {norm} exceeds 1 - mu_b = {} at w = {:?}",
                1.0 - mu,
                w.as_slice()
            )));
        }
    }
    Ok(())
}

/// `(A, B, C)` of a chain of `r` integrators on `d_y` channels. The state is
/// ordered as `x = (x_1, ..., x_r)` with each block in `R^{d_y}`.
pub fn build_chain_matrices(r: usize, d_y: usize) -> (Matrix, Matrix, Matrix) {
    let n = r * d_y;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(d_y) {
        a[(i, i + d_y)] = 1.0;
    }
    let mut b = Matrix::zeros(n, d_y);
    let mut c = Matrix::zeros(d_y, n);
    for k in 0..d_y {
        b[(n - d_y + k, k)] = 1.0;
        c[(k, k)] = 1.0;
    }
    (a, b, c)
}

/// `V(w) = (rho w1^2 + w2^2) / 2`, invariant along `w1' = w2, w2' = -rho w1`.
///
/// The linear expression `(rho w1 + w2) / 2` is sometimes quoted for this
/// oscillator; it is not conserved, so the quadratic form is used.
pub fn exo_energy(w: &Vector, rho: f64) -> f64 {
    0.5 * (rho * w[0] * w[0] + w[1] * w[1])
}

pub fn harmonic_exo_field(w: &Vector, rho: f64) -> Vector {
    Vector::from_vec(vec![w[1], -rho * w[0]])
}

/// `p1*(w) = 2 |w| asin(w1 / |w|)`, with `p1*(0) = 0`.
pub fn triangular_output(w: &Vector) -> f64 {
    let r = w[0].hypot(w[1]);
    if r == 0.0 {
        return 0.0;
    }
    2.0 * r * (w[0] / r).clamp(-1.0, 1.0).asin()
}

/// `(L_s p1*, L_s^2 p1*)` along `s(w) = (w2, -rho w1)`.
///
/// Fails with [`Error::BranchPoint`] at the peaks of the wave, where `p1*`
/// has a kink, and with an invalid-input error at `w = 0`.
pub fn lie_derivatives_p1star(w: &Vector, rho: f64) -> Result<(f64, f64)> {
    let r = w[0].hypot(w[1]);
    if r == 0.0 {
        return Err(invalid_input("Lie derivatives of p1* are undefined at w = 0"));
    }
    let ratio = w[1].abs() / r;
    if ratio <= BRANCH_TOLERANCE {
        return Err(Error::BranchPoint { ratio });
    }
    Ok(lie_derivatives_on_side(w, rho, w[1].signum()))
}

/// Right-continuous (in time) Lie derivatives: away from the peaks they equal
/// [`lie_derivatives_p1star`]; at a peak the one-sided limit on the side the
/// exosystem is moving into is taken.
pub fn lie_derivatives_p1star_forward(w: &Vector, rho: f64) -> (f64, f64) {
    let r = w[0].hypot(w[1]);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let side = if w[1].abs() / r > BRANCH_TOLERANCE {
        w[1].signum()
    } else if w[0] != 0.0 {
        // w2' = -rho w1 decides where w2 goes next
        -w[0].signum()
    } else {
        1.0
    };
    lie_derivatives_on_side(w, rho, side)
}

/// Closed form on the half plane `sign(w2) = side`.
///
/// With `r = |w|`, `phi = asin(w1 / r)` and `n = rho w1^2 + w2^2` (conserved):
/// `r' = (1 - rho) w1 w2 / r`, `phi' = side * n / r^2`,
/// `r'' = (1 - rho) ((w2^2 - rho w1^2) / r - w1 w2 r' / r^2)`,
/// `phi'' = -2 side n r' / r^3`.
fn lie_derivatives_on_side(w: &Vector, rho: f64, side: f64) -> (f64, f64) {
    let (w1, w2) = (w[0], w[1]);
    let r = w1.hypot(w2);
    let phi = (w1 / r).clamp(-1.0, 1.0).asin();
    let n = rho * w1 * w1 + w2 * w2;
    let r_dot = (1.0 - rho) * w1 * w2 / r;
    let phi_dot = side * n / (r * r);
    let r_ddot = (1.0 - rho) * ((w2 * w2 - rho * w1 * w1) / r - w1 * w2 * r_dot / (r * r));
    let phi_ddot = -2.0 * side * n * r_dot / (r * r * r);
    let first = 2.0 * (r_dot * phi + r * phi_dot);
    let second = 2.0 * (r_ddot * phi + 2.0 * r_dot * phi_dot + r * phi_ddot);
    (first, second)
}

/// Forced Van der Pol oscillator `p1' = p2, p2' = -p1 + a (1 - p1^2) p2 + u`
/// written in the tracking-error coordinates `x1 = p1 - p1*(w)`,
/// `x2 = p2 - L_s p1*(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VanDerPolTracking {
    pub a: f64,
    pub rho: f64,
}

/// Validated Van der Pol tracking plant.
pub fn build_vdp_scenario(a: f64, rho: f64) -> Result<VanDerPolTracking> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid_config(format!("Van der Pol parameter a must be positive, got {a}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid_config(format!("exosystem rho must be positive, got {rho}")));
    }
    Ok(VanDerPolTracking { a, rho })
}

impl VanDerPolTracking {
    /// Error coordinates of the physical state `p` at exosystem state `w`.
    pub fn error_coordinates(&self, w: &Vector, p: &Vector) -> Vector {
        let (l1, _) = lie_derivatives_p1star_forward(w, self.rho);
        Vector::from_vec(vec![p[0] - triangular_output(w), p[1] - l1])
    }

    /// `u*(w) = p1* + L^2 p1* - a (1 - p1*^2) L p1*`.
    pub fn ustar(&self, w: &Vector) -> f64 {
        let p = triangular_output(w);
        let (l1, l2) = lie_derivatives_p1star_forward(w, self.rho);
        p + l2 - self.a * (1.0 - p * p) * l1
    }
}

impl NormalFormPlant for VanDerPolTracking {
    fn dims(&self) -> PlantDims {
        PlantDims { d_w: 2, d_z: 0, d_y: 1, r: 2 }
    }

    fn exo_field(&self, w: &Vector) -> Vector {
        harmonic_exo_field(w, self.rho)
    }

    fn q(&self, w: &Vector, _z: &Vector, x: &Vector) -> Vector {
        let p = triangular_output(w);
        let (l1, l2) = lie_derivatives_p1star_forward(w, self.rho);
        let p1 = x[0] + p;
        let value = -x[0] - p - l2 + self.a * (1.0 - p1 * p1) * (x[1] + l1);
        Vector::from_element(1, value)
    }

    fn b(&self, _w: &Vector, _z: &Vector, _x: &Vector) -> Matrix {
        Matrix::from_element(1, 1, 1.0)
    }

    fn b_bar(&self) -> Matrix {
        Matrix::from_element(1, 1, 1.0)
    }

    fn mu_b(&self) -> f64 {
        0.5
    }

    fn ideal_feedforward(&self, w: &Vector) -> Option<Vector> {
        Some(Vector::from_element(1, self.ustar(w)))
    }
}

/// Linear plant driven by a harmonic exosystem:
/// `x1' = x2, x2' = -k1 x1 - k2 x2 - c^T w + u`, so `u*(w) = c^T w`.
///
/// Its ideal feedforward lies in any linear model set over an internal model
/// of dimension at least two, which makes it the reference case for
/// asymptotic regulation.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearHarmonicPlant {
    pub rho: f64,
    pub damping: [f64; 2],
    pub coupling: [f64; 2],
}

impl NormalFormPlant for LinearHarmonicPlant {
    fn dims(&self) -> PlantDims {
        PlantDims { d_w: 2, d_z: 0, d_y: 1, r: 2 }
    }

    fn exo_field(&self, w: &Vector) -> Vector {
        harmonic_exo_field(w, self.rho)
    }

    fn q(&self, w: &Vector, _z: &Vector, x: &Vector) -> Vector {
        let [k1, k2] = self.damping;
        let [c1, c2] = self.coupling;
        Vector::from_element(1, -k1 * x[0] - k2 * x[1] - c1 * w[0] - c2 * w[1])
    }

    fn b(&self, _w: &Vector, _z: &Vector, _x: &Vector) -> Matrix {
        Matrix::from_element(1, 1, 1.0)
    }

    fn b_bar(&self) -> Matrix {
        Matrix::from_element(1, 1, 1.0)
    }

    fn mu_b(&self) -> f64 {
        0.5
    }

    fn ideal_feedforward(&self, w: &Vector) -> Option<Vector> {
        let [c1, c2] = self.coupling;
        Some(Vector::from_element(1, c1 * w[0] + c2 * w[1]))
    }
}

/// Half period of the triangular wave, `pi / sqrt(rho)`: the time between
/// two consecutive peaks of `p1*`.
pub fn triangular_half_period(rho: f64) -> f64 {
    2.0 * FRAC_PI_2 / rho.sqrt()
}
