//! Small dense linear algebra and fixed-step integration.
//!
//! Everything here works on `nalgebra` dynamic matrices. The sizes involved
//! are tiny (a few hundred rows at most), so clarity wins over blocking.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid_input, Error, Result};
use crate::hybrid::HybridTime;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used when none is configured.
pub const DEFAULT_CUTOFF_REL: f64 = 1e-12;

pub(crate) fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid_input(format!("{what} has non-finite entries")))
    }
}

fn ensure_cutoff(cutoff_rel: f64) -> Result<()> {
    if cutoff_rel > 0.0 && cutoff_rel < 1.0 {
        Ok(())
    } else {
        Err(invalid_input(format!("cutoff_rel must lie in (0, 1), got {cutoff_rel}")))
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    ensure_finite(m, "matrix")?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    Ok(thin_svd(m)?.1)
}

/// Largest singular value; 0 for an empty matrix.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Thin SVD `m = U diag(s) V^T` with `s` in descending order.
///
/// Computed with faer: nalgebra 0.35's bidiagonal SVD loses accuracy on
/// rank-deficient input (reconstruction errors up to 1e-1 were observed on
/// random low-rank products).
fn thin_svd(m: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().map_err(|e| invalid_input(format!("SVD did not converge: {e:?}")))?;
    let k = rows.min(cols);
    let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
    let u = Matrix::from_fn(rows, k, |i, j| fu[(i, j)]);
    let v = Matrix::from_fn(cols, k, |i, j| fv[(i, j)]);
    let s = (0..k).map(|i| fs[i]).collect();
    Ok((u, s, v))
}

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// `cutoff_rel * s_max` are treated as zero.
pub fn pseudoinverse(m: &Matrix, cutoff_rel: f64) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    ensure_cutoff(cutoff_rel)?;
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Ok(Matrix::zeros(cols, rows));
    }
    let (u, sv, v) = thin_svd(m)?;
    let threshold = cutoff_rel * sv[0];
    let mut out = Matrix::zeros(cols, rows);
    for (k, &s) in sv.iter().enumerate() {
        if s > threshold && s > 0.0 {
            // out += v_k * u_k^T / s
            out.ger(1.0 / s, &v.column(k), &u.column(k), 1.0);
        }
    }
    Ok(out)
}

/// Pseudoinverse of a symmetric matrix through its eigendecomposition.
///
/// For symmetric input the singular values are the absolute eigenvalues, so
/// the result matches [`pseudoinverse`] with the same cutoff. Only the lower
/// triangle is read.
pub fn symmetric_pseudoinverse(m: &Matrix, cutoff_rel: f64) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    ensure_cutoff(cutoff_rel)?;
    if !m.is_square() {
        return Err(invalid_input("symmetric_pseudoinverse needs a square matrix"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let s_max = eig.eigenvalues.amax();
    let threshold = cutoff_rel * s_max;
    let mut scaled = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let factor = if lambda.abs() > threshold && lambda != 0.0 { 1.0 / lambda } else { 0.0 };
        scaled.column_mut(k).scale_mut(factor);
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Smallest singular value strictly above `cutoff_rel * s_max`, or 0 when none is.
pub fn min_nonzero_singular_value(m: &Matrix, cutoff_rel: f64) -> Result<f64> {
    ensure_cutoff(cutoff_rel)?;
    let sv = singular_values(m)?;
    let Some(&s_max) = sv.first() else {
        return Ok(0.0);
    };
    let threshold = cutoff_rel * s_max;
    Ok(sv.iter().rev().copied().find(|&s| s > threshold && s > 0.0).unwrap_or(0.0))
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &Matrix, cutoff_rel: f64) -> Result<usize> {
    ensure_cutoff(cutoff_rel)?;
    let sv = singular_values(m)?;
    let Some(&s_max) = sv.first() else {
        return Ok(0);
    };
    Ok(sv.iter().filter(|&&s| s > cutoff_rel * s_max && s > 0.0).count())
}

/// Eigenvalues of a general square matrix (real Schur form).
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    ensure_finite(m, "matrix")?;
    if !m.is_square() {
        return Err(invalid_input(format!("eigenvalues need a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

pub fn is_hurwitz(m: &Matrix) -> Result<bool> {
    if m.nrows() == 0 && m.is_square() {
        return Ok(true);
    }
    Ok(eigenvalues(m)?.iter().all(|l| l.re < 0.0))
}

/// `[G, FG, ..., F^{n-1} G]`.
pub fn controllability_matrix(f: &Matrix, g: &Matrix) -> Result<Matrix> {
    if !f.is_square() {
        return Err(invalid_input("F must be square"));
    }
    if g.nrows() != f.nrows() {
        return Err(invalid_input(format!("G has {} rows, F is {}x{}", g.nrows(), f.nrows(), f.ncols())));
    }
    ensure_finite(f, "F")?;
    ensure_finite(g, "G")?;
    let n = f.nrows();
    let m = g.ncols();
    let mut out = Matrix::zeros(n, n * m);
    let mut block = g.clone();
    for k in 0..n {
        out.columns_mut(k * m, m).copy_from(&block);
        block = f * &block;
    }
    Ok(out)
}

/// Full row rank of the controllability matrix, rank taken with a 1e-10 relative cutoff.
pub fn is_controllable(f: &Matrix, g: &Matrix) -> Result<bool> {
    let c = controllability_matrix(f, g)?;
    Ok(rank(&c, 1e-10)? == f.nrows())
}

/// Roots of the monic polynomial `s^n + c[0] s^{n-1} + ... + c[n-1]`.
pub fn monic_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let n = coeffs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut companion = Matrix::zeros(n, n);
    for (j, c) in coeffs.iter().enumerate() {
        companion[(0, j)] = -c;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    eigenvalues(&companion)
}

/// Coefficients `[c1, ..., cn]` of `prod (s - p_i) = s^n + c1 s^{n-1} + ... + cn`.
pub fn poly_from_real_roots(roots: &[f64]) -> Vec<f64> {
    // full[k] is the coefficient of s^{n-k}
    let mut full = vec![1.0];
    for &p in roots {
        let mut next = vec![0.0; full.len() + 1];
        for (k, &c) in full.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= p * c;
        }
        full = next;
    }
    full.split_off(1)
}

/// Gain `K` placing `eig(A - B K)` at `desired` for the chain of `r`
/// integrators on each of `d_y` channels (same placement on every channel).
pub fn place_poles(r: usize, d_y: usize, desired: &[f64]) -> Result<Matrix> {
    if r == 0 || d_y == 0 {
        return Err(invalid_input("place_poles needs r >= 1 and d_y >= 1"));
    }
    if desired.len() != r {
        return Err(invalid_input(format!("expected {r} desired poles, got {}", desired.len())));
    }
    if let Some(p) = desired.iter().find(|p| !p.is_finite() || **p >= 0.0) {
        return Err(invalid_input(format!("desired pole {p} is not strictly negative")));
    }
    let coeffs = poly_from_real_roots(desired);
    // Closed-loop last row is -K, so k_i = c_{r-i+1}.
    let mut k = Matrix::zeros(d_y, r * d_y);
    for ch in 0..d_y {
        for i in 0..r {
            k[(ch, i * d_y + ch)] = coeffs[r - 1 - i];
        }
    }
    Ok(k)
}

/// One classical fourth-order Runge-Kutta step of `dx/dt = field(t, x)`.
pub fn rk4_step<F>(field: F, t: f64, state: &Vector, dt: f64) -> Result<Vector>
where
    F: Fn(f64, &Vector) -> Vector,
{
    if !(dt > 0.0) {
        return Err(invalid_input(format!("dt must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let k1 = field(t, state);
    let k2 = field(t + half, &(state + &k1 * half));
    let k3 = field(t + half, &(state + &k2 * half));
    let k4 = field(t + dt, &(state + &k3 * dt));
    let next = state + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::IntegrationBlowup {
            at: HybridTime::new(t, 0),
            detail: format!("non-finite state after step from {:?}", state.as_slice()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn penrose_residual(m: &Matrix, p: &Matrix) -> f64 {
        let scale = m.norm().max(1.0) * p.norm().max(1.0);
        let r1 = (m * p * m - m).norm() / m.norm().max(1e-300);
        let r2 = (p * m * p - p).norm() / p.norm().max(1e-300);
        let r3 = ((m * p).transpose() - m * p).norm() / scale;
        let r4 = ((p * m).transpose() - p * m).norm() / scale;
        r1.max(r2).max(r3).max(r4)
    }

    #[test]
    fn pseudoinverse_diagonal_and_identity() {
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 0.0]));
        let p = pseudoinverse(&d, DEFAULT_CUTOFF_REL).unwrap();
        assert!((p - Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.0]))).norm() < 1e-15);
        let i3 = Matrix::identity(3, 3);
        assert!((pseudoinverse(&i3, DEFAULT_CUTOFF_REL).unwrap() - &i3).norm() < 1e-15);
    }

    #[test]
    fn pseudoinverse_left_inverse_of_tall_full_rank() {
        let m = Matrix::from_row_slice(4, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.7, -0.4, 1.1, 3.0, 0.2, -0.6]);
        let p = pseudoinverse(&m, DEFAULT_CUTOFF_REL).unwrap();
        assert!((&p * &m - Matrix::identity(3, 3)).norm() < 1e-10);
        assert!(penrose_residual(&m, &p) < 1e-12);
    }

    #[test]
    fn pseudoinverse_rejects_non_finite_and_bad_cutoff() {
        let m = Matrix::from_element(2, 2, f64::NAN);
        assert!(matches!(pseudoinverse(&m, 1e-12), Err(Error::InvalidInput(_))));
        assert!(pseudoinverse(&Matrix::identity(2, 2), 0.0).is_err());
        assert!(pseudoinverse(&Matrix::identity(2, 2), 1.0).is_err());
    }

    #[test]
    fn symmetric_route_matches_svd_route() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.5, 1.0]);
        let m = &a * a.transpose() + Matrix::from_diagonal_element(3, 3, 1e-3);
        let p1 = pseudoinverse(&m, DEFAULT_CUTOFF_REL).unwrap();
        let p2 = symmetric_pseudoinverse(&m, DEFAULT_CUTOFF_REL).unwrap();
        let gap = (&p1 - &p2).norm() / p1.norm();
        assert!(gap < 1e-10, "relative gap {gap}");
        let singular = &a * a.transpose();
        let p3 = symmetric_pseudoinverse(&singular, 1e-10).unwrap();
        assert!(penrose_residual(&singular, &p3) < 1e-10);
    }

    #[test]
    fn msv_cases() {
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0, 0.0]));
        assert_eq!(min_nonzero_singular_value(&d, DEFAULT_CUTOFF_REL).unwrap(), 1.0);
        assert_eq!(min_nonzero_singular_value(&Matrix::zeros(3, 3), DEFAULT_CUTOFF_REL).unwrap(), 0.0);
    }

    #[test]
    fn msv_of_regularized_gram_is_bounded_below() {
        let omega = Matrix::from_diagonal_element(6, 6, 1e-3);
        let mut acc = omega.clone();
        for k in 0..20 {
            let s = Vector::from_fn(6, |i, _| ((k * 7 + i * 3) as f64).sin());
            acc += &s * s.transpose();
        }
        let msv = min_nonzero_singular_value(&acc, DEFAULT_CUTOFF_REL).unwrap();
        let direct = *singular_values(&acc).unwrap().last().unwrap();
        assert!(msv >= 1e-3 - 1e-12, "{msv}");
        assert!((msv - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn place_poles_examples() {
        assert_eq!(place_poles(2, 1, &[-1.0, -2.0]).unwrap().as_slice(), &[2.0, 3.0]);
        assert_eq!(place_poles(1, 1, &[-5.0]).unwrap().as_slice(), &[5.0]);
        let k = place_poles(3, 1, &[-1.0, -2.0, -3.0]).unwrap();
        assert_eq!(k.as_slice(), &[6.0, 11.0, 6.0]);
        assert!(place_poles(2, 1, &[-1.0, 0.0]).is_err());
        assert!(place_poles(2, 1, &[-1.0]).is_err());
    }

    #[test]
    fn hurwitz_and_controllability() {
        assert!(!is_hurwitz(&Matrix::zeros(1, 1)).unwrap());
        assert!(is_hurwitz(&Matrix::from_row_slice(2, 2, &[-1.0, 5.0, 0.0, -0.1])).unwrap());
        let f = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        assert!(is_controllable(&f, &Matrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap());
        assert!(!is_controllable(&f, &Matrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap());
        assert!(is_controllable(&f, &Matrix::zeros(3, 1)).is_err());
        assert!(is_hurwitz(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn monic_roots_of_observer_polynomial() {
        let mut roots: Vec<f64> = monic_roots(&[6.0, 11.0, 6.0]).unwrap().iter().map(|c| c.re).collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        for (r, e) in roots.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((r - e).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_zero_field_and_exponential() {
        let x = Vector::from_vec(vec![1.5, -2.0]);
        let y = rk4_step(|_, s| Vector::zeros(s.len()), 0.0, &x, 0.1).unwrap();
        assert_eq!(x, y);
        let e = rk4_step(|_, s| s.clone(), 0.0, &Vector::from_vec(vec![1.0]), 0.1).unwrap();
        // 1 + h + h^2/2 + h^3/6 + h^4/24 at h = 0.1
        assert!((e[0] - 1.105_170_833_333_333_3).abs() < 1e-15);
        assert!((e[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_harmonic_oscillator_period() {
        let dt = 1e-3;
        let steps = (2.0 * std::f64::consts::PI / dt).floor() as usize;
        let field = |_: f64, s: &Vector| Vector::from_vec(vec![s[1], -s[0]]);
        let mut x = Vector::from_vec(vec![1.0, 0.0]);
        let mut t = 0.0;
        for _ in 0..steps {
            x = rk4_step(field, t, &x, dt).unwrap();
            t += dt;
        }
        let rest = 2.0 * std::f64::consts::PI - t;
        x = rk4_step(field, t, &x, rest).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && x[1].abs() < 1e-8, "{x:?}");
    }

    #[test]
    fn rk4_reports_blowup() {
        let err = rk4_step(|_, _| Vector::from_vec(vec![f64::INFINITY]), 2.5, &Vector::from_vec(vec![0.0]), 0.1);
        match err {
            Err(Error::IntegrationBlowup { at, .. }) => assert_eq!(at.t, 2.5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
