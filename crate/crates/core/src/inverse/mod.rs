//! Bayesian inverse problems on top of the collocation posterior:
//! marginalised data-likelihoods, grid posteriors, MCMC samplers and kernel
//! hyperparameter calibration.

pub mod mcmc;
pub mod semilinear;

use nalgebra::{DMatrix, DVector};

use crate::collocation::CollocationPosterior;
use crate::geom::{Domain, Point};
use crate::linalg;
use crate::opt;
use crate::{Error, Result};

/// Observation noise covariance: isotropic `γ²I` or a full PSD matrix.
#[derive(Debug, Clone)]
pub enum NoiseCov {
    Iso { variance: f64 },
    Full { cov: DMatrix<f64> },
}

impl NoiseCov {
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        match self {
            NoiseCov::Iso { variance } => DMatrix::identity(n, n) * *variance,
            NoiseCov::Full { cov } => cov.clone(),
        }
    }
}

/// Noisy point observations of the PDE solution.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub locations: Vec<Point>,
    pub values: DVector<f64>,
    pub noise: NoiseCov,
}

impl ObservationSet {
    pub fn new(
        locations: Vec<Point>,
        values: DVector<f64>,
        noise: NoiseCov,
        domain: &Domain,
    ) -> Result<Self> {
        if locations.len() != values.len() {
            return Err(Error::Config("one observation value per location".into()));
        }
        for p in &locations {
            if !domain.contains_closure(p, 1e-9) {
                return Err(Error::Domain(format!("observation location {p} outside the domain")));
            }
        }
        match &noise {
            NoiseCov::Iso { variance } => {
                if !(*variance > 0.0) {
                    return Err(Error::Config("noise variance must be positive".into()));
                }
            }
            NoiseCov::Full { cov } => {
                if cov.nrows() != locations.len() || cov.ncols() != locations.len() {
                    return Err(Error::Config("noise covariance shape mismatch".into()));
                }
                let min = linalg::smallest_eigenvalue(cov);
                if min < -1e-10 {
                    return Err(Error::Config(format!(
                        "noise covariance is not PSD (min eigenvalue {min:.3e})"
                    )));
                }
            }
        }
        Ok(ObservationSet { locations, values, noise })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// Marginalised log-likelihood `log N(y; μ(X), Σ(X) + Γ)`: solver and
/// observation uncertainty enter jointly, so an under-resolved solver widens
/// the likelihood instead of biasing it confidently.
pub fn marginal_log_likelihood(p: &CollocationPosterior, obs: &ObservationSet) -> Result<f64> {
    let mu = p.posterior_mean(&obs.locations)?;
    let sigma = p.posterior_cov(&obs.locations)?;
    marginal_log_likelihood_from_moments(&mu, &sigma, obs)
}

/// Same likelihood from precomputed posterior moments (used by `θ`-sweeps).
pub fn marginal_log_likelihood_from_moments(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    obs: &ObservationSet,
) -> Result<f64> {
    let s = sigma + obs.noise.matrix(obs.len());
    linalg::log_gaussian_density(&obs.values, mu, &s)
}

/// Conventional plug-in log-likelihood `log N(y; μ(X), Γ)`: the solver mean
/// is substituted for the truth and its uncertainty discarded. Kept as the
/// comparison baseline.
pub fn plug_in_log_likelihood(p: &CollocationPosterior, obs: &ObservationSet) -> Result<f64> {
    let mu = p.posterior_mean(&obs.locations)?;
    plug_in_log_likelihood_from_mean(&mu, obs)
}

pub fn plug_in_log_likelihood_from_mean(mu: &DVector<f64>, obs: &ObservationSet) -> Result<f64> {
    let s = obs.noise.matrix(obs.len());
    linalg::log_gaussian_density(&obs.values, mu, &s)
}

/// Normalised posterior over a parameter grid (trapezoid rule), with summary
/// moments.
#[derive(Debug, Clone)]
pub struct PosteriorGrid {
    pub thetas: Vec<f64>,
    pub log_unnormalised: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl PosteriorGrid {
    /// Grid point with the highest density.
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for i in 1..self.density.len() {
            if self.density[i] > self.density[best] {
                best = i;
            }
        }
        self.thetas[best]
    }

    /// Whether `theta0` lies within one posterior standard deviation of the
    /// posterior mean.
    pub fn one_sd_covers(&self, theta0: f64) -> bool {
        (self.mean - theta0).abs() <= self.sd
    }
}

/// Evaluate `exp(loglike + logprior)` over a grid and normalise.
pub fn grid_posterior(
    thetas: &[f64],
    mut loglike: impl FnMut(f64) -> Result<f64>,
    logprior: impl Fn(f64) -> f64,
) -> Result<PosteriorGrid> {
    if thetas.len() < 2 {
        return Err(Error::Config("posterior grid needs at least two points".into()));
    }
    let mut log_unnorm = Vec::with_capacity(thetas.len());
    for &t in thetas {
        log_unnorm.push(loglike(t)? + logprior(t));
    }
    let max = log_unnorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("posterior vanished on the whole grid".into()));
    }
    let mut density: Vec<f64> = log_unnorm.iter().map(|l| (l - max).exp()).collect();
    let mass = trapezoid(thetas, &density);
    if !(mass > 0.0) {
        return Err(Error::Numerical("posterior mass is zero on the grid".into()));
    }
    for d in density.iter_mut() {
        *d /= mass;
    }
    let weighted: Vec<f64> = thetas.iter().zip(&density).map(|(t, d)| t * d).collect();
    let mean = trapezoid(thetas, &weighted);
    let centred: Vec<f64> = thetas
        .iter()
        .zip(&density)
        .map(|(t, d)| (t - mean) * (t - mean) * d)
        .collect();
    let sd = trapezoid(thetas, &centred).max(0.0).sqrt();
    Ok(PosteriorGrid {
        thetas: thetas.to_vec(),
        log_unnormalised: log_unnorm,
        density,
        mean,
        sd,
    })
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    acc
}

/// Log-spaced grid, inclusive of both ends.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Linearly spaced grid, inclusive of both ends.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Result of empirical-Bayes calibration of a kernel hyperparameter.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub best: f64,
    /// `(candidate, log-likelihood)` pairs over the search grid, for audit.
    pub surface: Vec<(f64, f64)>,
}

/// Maximise a data log-likelihood over a hyperparameter grid, then refine by
/// golden section between the best grid point's neighbours. Grid points at
/// which the likelihood fails numerically are skipped; if all fail the
/// calibration errors out.
pub fn calibrate_empirical_bayes(
    mut loglike: impl FnMut(f64) -> Result<f64>,
    grid: &[f64],
) -> Result<Calibration> {
    if grid.is_empty() {
        return Err(Error::Config("calibration grid is empty".into()));
    }
    let mut surface = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, &l) in grid.iter().enumerate() {
        match loglike(l) {
            Ok(v) if v.is_finite() => {
                surface.push((l, v));
                if best.map_or(true, |(_, bv)| v > bv) {
                    best = Some((i, v));
                }
            }
            _ => surface.push((l, f64::NEG_INFINITY)),
        }
    }
    let (bi, _) = best.ok_or_else(|| {
        Error::Calibration("likelihood failed at every grid point".into())
    })?;
    if grid.len() == 1 {
        return Ok(Calibration { best: grid[0], surface });
    }
    let lo = if bi == 0 { grid[0] } else { grid[bi - 1] };
    let hi = if bi + 1 == grid.len() { grid[bi] } else { grid[bi + 1] };
    let refined = opt::golden_section_max(
        |l| match loglike(l) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        },
        lo,
        hi,
        48,
    );
    Ok(Calibration { best: refined, surface })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_posterior_of_gaussian_recovers_moments() {
        let thetas = lin_grid(-6.0, 6.0, 2001);
        let pg = grid_posterior(&thetas, |_| Ok(0.0), |t| -0.5 * (t - 0.7_f64).powi(2) / 0.09)
            .unwrap();
        assert!((pg.mean - 0.7).abs() < 1e-6);
        assert!((pg.sd - 0.3).abs() < 1e-6);
        assert!(pg.one_sd_covers(0.8));
        assert!(!pg.one_sd_covers(1.2));
    }

    #[test]
    fn calibration_single_point_grid() {
        let c = calibrate_empirical_bayes(|l| Ok(-(l - 3.0) * (l - 3.0)), &[2.0]).unwrap();
        assert_eq!(c.best, 2.0);
        assert_eq!(c.surface.len(), 1);
    }

    #[test]
    fn calibration_refines_to_the_optimum() {
        let grid = lin_grid(0.5, 4.0, 8);
        let c = calibrate_empirical_bayes(|l| Ok(-(l - 2.2) * (l - 2.2)), &grid).unwrap();
        assert!((c.best - 2.2).abs() < 1e-6, "{}", c.best);
    }

    #[test]
    fn calibration_errors_when_everything_fails() {
        let e = calibrate_empirical_bayes(
            |_| Err(Error::Numerical("boom".into())),
            &[1.0, 2.0],
        );
        assert!(matches!(e, Err(Error::Calibration(_))));
    }
}
