//! Independent reference computations used to certify the closed-form and
//! factorisation paths. Everything here deliberately avoids the
//! implementation code it checks: kernels are integrated numerically from
//! their defining integrals, Gaussian densities are evaluated with explicit
//! inverses and determinants, and derivatives come from finite differences.

use nalgebra::{DMatrix, DVector};

use crate::geom::Point;
use crate::quad;
use crate::{Error, Result};

/// Brute-force double quadrature of the defining integral of the natural
/// Poisson kernel, `∫∫ G(x,z) G(x',z') Λ(z,z') dz dz'`, with panels split at
/// the integrand's kinks and a high-order rule per panel.
pub fn natural_kernel_double_quadrature(x: f64, xp: f64, eps: f64, theta: f64) -> f64 {
    let gl = quad::rule(32);
    let e = 1.0 / eps;
    let green = |a: f64, t: f64| if t < a { t * (a - 1.0) } else { a * (t - 1.0) };
    let bump = |d: f64| {
        let t = 1.0 - eps * d.abs();
        if t > 0.0 {
            t * t
        } else {
            0.0
        }
    };
    let inner = |z: f64| {
        let cuts = [xp, z - e, z, z + e];
        quad::integrate_with_breakpoints(&gl, 0.0, 1.0, &cuts, |t| green(xp, t) * bump(z - t))
    };
    let outer_cuts = [x, xp - e, xp, xp + e, e, 1.0 - e, x - e, x + e];
    let v = quad::integrate_with_breakpoints(&gl, 0.0, 1.0, &outer_cuts, |z| green(x, z) * inner(z));
    v / (theta * theta)
}

/// Single quadrature of `∫ G(x',t) Λ(x,t) dt` for the operator-applied
/// natural kernel.
pub fn natural_cross_quadrature(x: f64, xp: f64, eps: f64, theta: f64) -> f64 {
    let gl = quad::rule(32);
    let e = 1.0 / eps;
    let green = |a: f64, t: f64| if t < a { t * (a - 1.0) } else { a * (t - 1.0) };
    let bump = |d: f64| {
        let t = 1.0 - eps * d.abs();
        if t > 0.0 {
            t * t
        } else {
            0.0
        }
    };
    let cuts = [xp, x - e, x, x + e];
    quad::integrate_with_breakpoints(&gl, 0.0, 1.0, &cuts, |t| green(xp, t) * bump(x - t)) / theta
}

/// Adaptive Simpson integration; tolerance-driven, no kink knowledge.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, 0.5 * (a + m), m);
        let right = simpson(f, m, 0.5 * (m + b), b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    recurse(&f, a, b, simpson(&f, a, m, b), tol, 28)
}

/// Dense-formula Gaussian log-density: explicit inverse and determinant.
pub fn dense_log_gaussian(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let n = y.len();
    let det = cov.determinant();
    if !(det > 0.0) {
        return Err(Error::Numerical(format!("oracle determinant {det} not positive")));
    }
    let inv = cov
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("oracle inverse failed".into()))?;
    let r = y - mean;
    Ok(-0.5 * (&r.transpose() * &inv * &r)[(0, 0)]
        - 0.5 * det.ln()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Central second difference along `axis`.
pub fn second_difference(f: impl Fn(&Point) -> f64, p: &Point, axis: usize, h: f64) -> f64 {
    let up = p.with_coord(axis, p.coord(axis) + h);
    let dn = p.with_coord(axis, p.coord(axis) - h);
    (f(&up) - 2.0 * f(p) + f(&dn)) / (h * h)
}

/// Finite-difference Laplacian of a bivariate-argument kernel in its first
/// argument.
pub fn fd_laplacian_first_arg(
    f: impl Fn(&Point, &Point) -> f64 + Copy,
    x: &Point,
    y: &Point,
    h: f64,
) -> f64 {
    (0..x.dim())
        .map(|axis| second_difference(|p| f(p, y), x, axis, h))
        .sum()
}

/// Closed-form marginal likelihood of the proper linear-Gaussian latent
/// model: with `Q(z) = N(y; mu0 + M z, S)` and a flat (Lebesgue) measure on
/// `z`, provided `MᵀS⁻¹M` is invertible,
/// `∫ Q(z) dz = N-type constant × exp(-½ eᵀ(S⁻¹ - S⁻¹M(MᵀS⁻¹M)⁻¹MᵀS⁻¹)e)`.
/// Returns the log value. This is the oracle for the unbiasedness of the
/// importance-sampled estimator on linear problems.
pub fn log_flat_latent_marginal(
    y: &DVector<f64>,
    mu0: &DVector<f64>,
    m: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<f64> {
    let n = y.len();
    let k = m.ncols();
    if n < k {
        return Err(Error::Config(
            "flat-latent marginal needs at least as many observations as latent dims".into(),
        ));
    }
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("S not invertible".into()))?;
    let a = m.transpose() * &s_inv * m;
    let a_det = a.determinant();
    if !(a_det > 0.0) {
        return Err(Error::Numerical("MᵀS⁻¹M is singular".into()));
    }
    let a_inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("MᵀS⁻¹M not invertible".into()))?;
    let e = y - mu0;
    let proj = &s_inv - &s_inv * m * a_inv * m.transpose() * &s_inv;
    let quad = (&e.transpose() * proj * &e)[(0, 0)];
    let s_det = s.determinant();
    Ok(-0.5 * quad - 0.5 * s_det.ln() - 0.5 * a_det.ln()
        - 0.5 * (n as f64 - k as f64) * (2.0 * std::f64::consts::PI).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_simpson_integrates_a_kinked_function() {
        let v = adaptive_simpson(|x| (x - 0.37).abs(), 0.0, 1.0, 1e-12);
        let exact = 0.37_f64.powi(2) / 2.0 + 0.63_f64.powi(2) / 2.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn flat_latent_marginal_scalar_case() {
        // y = z + e, S = s², flat z: ∫ N(y; z, s²) dz = 1 for any y
        let y = DVector::from_vec(vec![0.7]);
        let mu0 = DVector::zeros(1);
        let m = DMatrix::from_row_slice(1, 1, &[1.0]);
        let s = DMatrix::from_row_slice(1, 1, &[0.25]);
        let v = log_flat_latent_marginal(&y, &mu0, &m, &s).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }
}
