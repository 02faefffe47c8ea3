//! Dense linear-algebra helpers shared by the collocation and inference
//! modules: jitter-escalated Cholesky, clamped eigendecompositions and
//! Gaussian log-densities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Relative floor of the jitter escalation, as a fraction of `trace/n`.
pub const JITTER_REL_START: f64 = 1e-12;
/// Relative cap; beyond this the matrix is reported ill-conditioned.
pub const JITTER_REL_MAX: f64 = 1e-6;

pub struct JitteredCholesky {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

/// Cholesky of a symmetric matrix with escalating diagonal jitter.
///
/// Starts at `max(requested, 1e-12 * trace/n)` and multiplies by 10 until the
/// factorisation succeeds or the `1e-6 * trace/n` cap is passed, at which
/// point the smallest-eigenvalue estimate is reported. Symmetric-collocation
/// Gram matrices are routinely near-singular, and a hard failure here is the
/// signal the design-search module relies on.
pub fn jittered_cholesky(g: &DMatrix<f64>, requested: f64) -> Result<JitteredCholesky> {
    let n = g.nrows();
    assert_eq!(n, g.ncols());
    let scale = (g.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut jitter = (JITTER_REL_START * scale).max(requested.max(0.0));
    let cap = JITTER_REL_MAX * scale;
    // symmetrise once; callers assemble nominally-symmetric matrices
    let sym = symmetrize(g);
    loop {
        let mut attempt = sym.clone();
        for i in 0..n {
            attempt[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(attempt) {
            return Ok(JitteredCholesky { chol, jitter });
        }
        jitter *= 10.0;
        if jitter > cap {
            let min_eig = smallest_eigenvalue(&sym);
            return Err(Error::IllConditioned { min_eig, size: n });
        }
    }
}

pub fn symmetrize(g: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (g + g.transpose())
}

pub fn smallest_eigenvalue(g: &DMatrix<f64>) -> f64 {
    let eig = symmetrize(g).symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Factor for sampling from `N(0, S)`: eigendecompose, clamp eigenvalues in
/// `[-tol, 0)` to zero, and reject anything more negative. Returns `U *
/// diag(sqrt(lambda))`.
pub fn psd_sample_factor(s: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let eig = symmetrize(s).symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max).max(1.0);
    let floor = -rel_tol * max;
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(Error::Numerical(format!(
                "covariance has eigenvalue {v:.3e} below the clamp floor {floor:.3e}"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let mut f = eig.eigenvectors;
    for (j, v) in vals.iter().enumerate() {
        f.column_mut(j).scale_mut(*v);
    }
    Ok(f)
}

/// `log N(y; mean, cov)`, by Cholesky when possible and a clamped
/// eigendecomposition otherwise. Eigenvalues below `-1e-10 * max` raise a
/// numerical error carrying condition diagnostics.
pub fn log_gaussian_density(
    y: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<f64> {
    let n = y.len();
    let resid = y - mean;
    let sym = symmetrize(cov);
    if let Some(chol) = Cholesky::new(sym.clone()) {
        let half = chol.l_dirty().solve_lower_triangular(&resid).ok_or_else(|| {
            Error::Numerical("triangular solve failed in Gaussian density".into())
        })?;
        let logdet: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        return Ok(-0.5 * half.norm_squared()
            - 0.5 * logdet
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln());
    }
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::Numerical("covariance is not positive".into()));
    }
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * max {
        return Err(Error::Numerical(format!(
            "covariance not PSD after clamp: min eigenvalue {min:.3e}, max {max:.3e}, cond>{:.1e}",
            max / min.abs().max(f64::MIN_POSITIVE)
        )));
    }
    let floor = 1e-14 * max;
    let proj = eig.eigenvectors.transpose() * &resid;
    let mut quad = 0.0;
    let mut logdet = 0.0;
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        let l = lam.max(floor);
        quad += proj[i] * proj[i] / l;
        logdet += l.ln();
    }
    Ok(-0.5 * quad - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// `log(sum(exp(xs)))` with the usual max shift; `-inf` entries are ignored.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_recovers_rank_deficient_gram() {
        // rank-1 matrix: needs jitter, must not error
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let g = &v * v.transpose();
        let jc = jittered_cholesky(&g, 0.0).unwrap();
        assert!(jc.jitter > 0.0);
    }

    #[test]
    fn cholesky_failure_reports_min_eig() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match jittered_cholesky(&g, 0.0) {
            Err(Error::IllConditioned { min_eig, size: 2 }) => {
                assert!((min_eig - (-1.0)).abs() < 1e-12)
            }
            Err(e) => panic!("expected IllConditioned, got {e:?}"),
            Ok(_) => panic!("expected IllConditioned, got a factorisation"),
        }
    }

    #[test]
    fn gaussian_density_matches_scalar_formula() {
        let y = DVector::from_vec(vec![1.3]);
        let m = DVector::from_vec(vec![0.8]);
        let s = DMatrix::from_row_slice(1, 1, &[0.25]);
        let got = log_gaussian_density(&y, &m, &s).unwrap();
        let expect = -0.5 * (0.5_f64).powi(2) / 0.25
            - 0.5 * (0.25_f64).ln()
            - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[0.0, f64::NEG_INFINITY]);
        assert!((v - 0.0).abs() < 1e-15);
    }
}
