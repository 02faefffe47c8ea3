//! MCMC samplers: preconditioned Crank–Nicolson for (transformed-)Gaussian
//! priors, random-walk Metropolis, and the scalar pseudo-marginal chain.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::kernels::KernelSpec;
use crate::linalg;
use crate::{Error, Result};
use crate::geom::Point;

/// Prior over a scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarPrior {
    /// `log θ ~ N(mean, sd²)`.
    LogGaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ScalarPrior {
    pub fn standard_log_gaussian() -> Self {
        ScalarPrior::LogGaussian { mean: 0.0, sd: 1.0 }
    }

    /// Log prior density in `θ`-space (including the Jacobian for the
    /// log-Gaussian case); `-inf` outside the support.
    pub fn log_density(&self, theta: f64) -> f64 {
        match *self {
            ScalarPrior::LogGaussian { mean, sd } => {
                if theta <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (theta.ln() - mean) / sd;
                -0.5 * z * z - theta.ln() - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            ScalarPrior::Uniform { lo, hi } => {
                if theta >= lo && theta <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// A deterministic central starting value.
    pub fn midpoint(&self) -> f64 {
        match *self {
            ScalarPrior::LogGaussian { mean, .. } => mean.exp(),
            ScalarPrior::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarPrior::LogGaussian { sd, .. } => {
                if !(sd > 0.0) {
                    return Err(Error::Config("log-Gaussian sd must be positive".into()));
                }
            }
            ScalarPrior::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::Config(format!(
                        "uniform prior needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Link between the Gaussian sampling space and the natural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Exp,
    Identity,
}

impl Transform {
    fn apply(&self, v: f64) -> f64 {
        match self {
            Transform::Exp => v.exp(),
            Transform::Identity => v,
        }
    }
}

/// The unknown of an inverse problem: a scalar coefficient or a field over a
/// grid with a Gaussian process prior.
#[derive(Debug, Clone)]
pub enum ParameterModel {
    Scalar { prior: ScalarPrior },
    Field { grid: Vec<Point>, prior_cov: KernelSpec, transform: Transform },
}

/// A parameter value in natural space.
#[derive(Debug, Clone)]
pub enum ParamValue {
    Scalar(f64),
    Field(DVector<f64>),
}

impl ParamValue {
    pub fn as_scalar(&self) -> f64 {
        match self {
            ParamValue::Scalar(v) => *v,
            ParamValue::Field(_) => panic!("field value where a scalar was expected"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ChainSamples {
    Scalar(Vec<f64>),
    Field(Vec<DVector<f64>>),
}

/// MCMC output: one record per iteration.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub samples: ChainSamples,
    pub log_like: Vec<f64>,
    pub accepted: Vec<bool>,
    pub solution_indices: Option<Vec<usize>>,
    pub lengthscales: Option<Vec<f64>>,
    pub rng_seed: u64,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|a| **a).count() as f64 / self.accepted.len() as f64
    }

    pub fn scalar_samples(&self) -> Result<&[f64]> {
        match &self.samples {
            ChainSamples::Scalar(v) => Ok(v),
            ChainSamples::Field(_) => {
                Err(Error::Config("trace holds field samples, not scalars".into()))
            }
        }
    }

    /// Posterior mean and standard deviation of the scalar trace after
    /// discarding `burn_in` samples.
    pub fn scalar_moments(&self, burn_in: usize) -> Result<(f64, f64)> {
        let xs = self.scalar_samples()?;
        if xs.len() <= burn_in + 1 {
            return Err(Error::Config("trace shorter than the burn-in".into()));
        }
        let tail = &xs[burn_in..];
        let n = tail.len() as f64;
        let mean = tail.iter().sum::<f64>() / n;
        let var = tail.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Ok((mean, var.sqrt()))
    }

    /// Histogram mode of the scalar trace over `bins` equal-width bins.
    pub fn scalar_mode(&self, burn_in: usize, bins: usize) -> Result<f64> {
        let xs = self.scalar_samples()?;
        let tail = &xs[burn_in.min(xs.len().saturating_sub(1))..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Ok(lo);
        }
        let mut counts = vec![0usize; bins];
        for x in tail {
            let b = (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let best = counts
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| **c)
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(lo + (best as f64 + 0.5) * (hi - lo) / bins as f64)
    }
}

fn draw_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Preconditioned Crank–Nicolson sampler.
///
/// The proposal `θ* = m + sqrt(1-λ²)(θ - m) + λ ξ`, `ξ ~ N(0, C)`, preserves
/// the Gaussian reference measure, so the acceptance ratio involves only the
/// potential `Φ` (the negative log-likelihood): `α = min{1, exp(Φ(θ) -
/// Φ(θ*))}`. Requires a (transformed-)Gaussian prior; uniform priors are
/// rejected.
///
/// The potential receives the parameter in natural space (after `exp` for
/// log-Gaussian scalars and `Exp`-transformed fields).
pub fn pcn_sample(
    model: &ParameterModel,
    potential: &dyn Fn(&ParamValue) -> f64,
    lambda: f64,
    iters: usize,
    seed: u64,
) -> Result<ChainTrace> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Config(format!("pCN step size must lie in (0,1), got {lambda}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let contraction = (1.0 - lambda * lambda).sqrt();
    match model {
        ParameterModel::Scalar { prior } => {
            let (mean, sd) = match *prior {
                ScalarPrior::LogGaussian { mean, sd } => (mean, sd),
                ScalarPrior::Uniform { .. } => {
                    return Err(Error::UnsupportedPrior(
                        "pCN needs a Gaussian reference; use a random-walk or pseudo-marginal \
                         chain for uniform priors"
                            .into(),
                    ))
                }
            };
            let mut xi = mean; // start at the prior mode in Gaussian space
            let mut phi = potential(&ParamValue::Scalar(xi.exp()));
            let mut samples = Vec::with_capacity(iters);
            let mut log_like = Vec::with_capacity(iters);
            let mut accepted = Vec::with_capacity(iters);
            for _ in 0..iters {
                let noise: f64 = draw_standard_normal(&mut rng);
                let prop = mean + contraction * (xi - mean) + lambda * sd * noise;
                let phi_prop = potential(&ParamValue::Scalar(prop.exp()));
                let log_alpha = phi - phi_prop;
                let u: f64 = rng.gen();
                let accept = u.ln() < log_alpha;
                if accept {
                    xi = prop;
                    phi = phi_prop;
                }
                samples.push(xi.exp());
                log_like.push(-phi);
                accepted.push(accept);
            }
            Ok(ChainTrace {
                samples: ChainSamples::Scalar(samples),
                log_like,
                accepted,
                solution_indices: None,
                lengthscales: None,
                rng_seed: seed,
            })
        }
        ParameterModel::Field { grid, prior_cov, transform } => {
            let n = grid.len();
            if n == 0 {
                return Err(Error::Config("field model needs a non-empty grid".into()));
            }
            let mut cov = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = prior_cov.eval(&grid[i], &grid[j])?;
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
            let factor = linalg::jittered_cholesky(&cov, 0.0)?;
            let l = factor.chol.l();
            let natural = |v: &DVector<f64>| DVector::from_iterator(n, v.iter().map(|x| transform.apply(*x)));
            let mut state = DVector::zeros(n);
            let mut phi = potential(&ParamValue::Field(natural(&state)));
            let mut samples = Vec::with_capacity(iters);
            let mut log_like = Vec::with_capacity(iters);
            let mut accepted = Vec::with_capacity(iters);
            for _ in 0..iters {
                let xi = DVector::from_fn(n, |_, _| draw_standard_normal(&mut rng));
                let prop = contraction * &state + lambda * (&l * xi);
                let phi_prop = potential(&ParamValue::Field(natural(&prop)));
                let log_alpha = phi - phi_prop;
                let u: f64 = rng.gen();
                let accept = u.ln() < log_alpha;
                if accept {
                    state = prop;
                    phi = phi_prop;
                }
                samples.push(natural(&state));
                log_like.push(-phi);
                accepted.push(accept);
            }
            Ok(ChainTrace {
                samples: ChainSamples::Field(samples),
                log_like,
                accepted,
                solution_indices: None,
                lengthscales: None,
                rng_seed: seed,
            })
        }
    }
}

/// Plain random-walk Metropolis for a scalar parameter with a deterministic
/// log-likelihood. Out-of-support proposals are rejected before any
/// likelihood evaluation or acceptance draw.
pub fn rw_metropolis(
    prior: &ScalarPrior,
    loglike: &dyn Fn(f64) -> Result<f64>,
    proposal_sd: f64,
    iters: usize,
    seed: u64,
) -> Result<ChainTrace> {
    prior.validate()?;
    if !(proposal_sd > 0.0) {
        return Err(Error::Config("proposal sd must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = prior.midpoint();
    let mut ll = loglike(theta)?;
    let mut lp = prior.log_density(theta);
    let mut samples = Vec::with_capacity(iters);
    let mut log_like = Vec::with_capacity(iters);
    let mut accepted = Vec::with_capacity(iters);
    for _ in 0..iters {
        let noise: f64 = draw_standard_normal(&mut rng);
        let prop = theta + proposal_sd * noise;
        let lp_prop = prior.log_density(prop);
        let mut accept = false;
        if lp_prop > f64::NEG_INFINITY {
            let ll_prop = loglike(prop)?;
            let log_alpha = lp_prop + ll_prop - lp - ll;
            let u: f64 = rng.gen();
            if u.ln() < log_alpha {
                theta = prop;
                ll = ll_prop;
                lp = lp_prop;
                accept = true;
            }
        }
        samples.push(theta);
        log_like.push(ll);
        accepted.push(accept);
    }
    Ok(ChainTrace {
        samples: ChainSamples::Scalar(samples),
        log_like,
        accepted,
        solution_indices: None,
        lengthscales: None,
        rng_seed: seed,
    })
}

/// Options for the scalar pseudo-marginal chain.
#[derive(Debug, Clone)]
pub struct PseudoMarginalOptions {
    pub proposal_sd: f64,
    pub solution_count: usize,
    pub iters: usize,
    pub seed: u64,
    pub init_theta: Option<f64>,
}

/// Pseudo-marginal Metropolis–Hastings on `(θ, solution index)`.
///
/// `estimator(θ, i, rng)` returns an unbiased (up to a common constant)
/// log-likelihood estimate; the retained estimate is reused unchanged when a
/// proposal is rejected, which is what keeps the chain exact. The solution
/// index is proposed uniformly (and not at all when only one solution is
/// declared, so the single-solution chain consumes the same random stream as
/// a plain random-walk). The `θ`-proposal is a symmetric Gaussian;
/// out-of-support proposals are rejected outright.
pub fn pseudo_marginal_scalar<E>(
    prior: &ScalarPrior,
    mut estimator: E,
    opts: &PseudoMarginalOptions,
) -> Result<ChainTrace>
where
    E: FnMut(f64, usize, &mut ChaCha8Rng) -> Result<f64>,
{
    prior.validate()?;
    if !(opts.proposal_sd > 0.0) {
        return Err(Error::Config("proposal sd must be positive".into()));
    }
    if opts.solution_count == 0 {
        return Err(Error::Config("solution count must be at least 1".into()));
    }
    let s = opts.solution_count;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut theta = opts.init_theta.unwrap_or_else(|| prior.midpoint());
    if prior.log_density(theta) == f64::NEG_INFINITY {
        return Err(Error::Config("initial theta outside the prior support".into()));
    }
    let mut index = (s - 1) / 2;
    let mut log_est = estimator(theta, index, &mut rng)?;
    if !log_est.is_finite() && log_est != f64::NEG_INFINITY {
        return Err(Error::Numerical("initial likelihood estimate is NaN".into()));
    }
    let mut lp = prior.log_density(theta);

    let mut samples = Vec::with_capacity(opts.iters);
    let mut log_like = Vec::with_capacity(opts.iters);
    let mut accepted = Vec::with_capacity(opts.iters);
    let mut indices = Vec::with_capacity(opts.iters);
    for _ in 0..opts.iters {
        let noise: f64 = draw_standard_normal(&mut rng);
        let theta_prop = theta + opts.proposal_sd * noise;
        let index_prop = if s > 1 { rng.gen_range(0..s) } else { 0 };
        let lp_prop = prior.log_density(theta_prop);
        let mut accept = false;
        if lp_prop > f64::NEG_INFINITY {
            let log_est_prop = estimator(theta_prop, index_prop, &mut rng)?;
            let log_alpha = lp_prop + log_est_prop - lp - log_est;
            let u: f64 = rng.gen();
            if u.ln() < log_alpha {
                theta = theta_prop;
                index = index_prop;
                log_est = log_est_prop;
                lp = lp_prop;
                accept = true;
            }
        }
        samples.push(theta);
        log_like.push(log_est);
        accepted.push(accept);
        indices.push(index);
    }
    Ok(ChainTrace {
        samples: ChainSamples::Scalar(samples),
        log_like,
        accepted,
        solution_indices: Some(indices),
        lengthscales: None,
        rng_seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics;

    #[test]
    fn pcn_rejects_uniform_priors() {
        let model = ParameterModel::Scalar { prior: ScalarPrior::Uniform { lo: 0.0, hi: 1.0 } };
        let e = pcn_sample(&model, &|_| 0.0, 0.5, 10, 1);
        assert!(matches!(e, Err(Error::UnsupportedPrior(_))));
    }

    #[test]
    fn pcn_zero_potential_accepts_everything() {
        let model = ParameterModel::Scalar { prior: ScalarPrior::standard_log_gaussian() };
        let t = pcn_sample(&model, &|_| 0.0, 0.5, 500, 7).unwrap();
        assert_eq!(t.acceptance_rate(), 1.0);
    }

    #[test]
    fn pcn_zero_potential_preserves_the_prior() {
        let model = ParameterModel::Scalar { prior: ScalarPrior::standard_log_gaussian() };
        for seed in [1_u64, 2, 3] {
            let t = pcn_sample(&model, &|_| 0.0, 0.5, 20_000, seed).unwrap();
            let logs: Vec<f64> =
                t.scalar_samples().unwrap().iter().map(|x| x.ln()).collect();
            let ess = diagnostics::effective_sample_size(&logs);
            let mean = logs.iter().sum::<f64>() / logs.len() as f64;
            let var = logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (logs.len() - 1) as f64;
            assert!(
                mean.abs() < 4.0 / ess.sqrt(),
                "seed {seed}: mean {mean}, ess {ess}"
            );
            assert!((var - 1.0).abs() < 0.1, "seed {seed}: var {var}");
        }
    }

    #[test]
    fn pcn_matches_conjugate_posterior_on_linear_gaussian_toy() {
        // xi ~ N(0,1); y = a*xi + e, e ~ N(0, s^2)
        let (a, s, y) = (1.3_f64, 0.8_f64, 0.9_f64);
        let model = ParameterModel::Scalar { prior: ScalarPrior::standard_log_gaussian() };
        let potential = move |v: &ParamValue| {
            let xi = v.as_scalar().ln();
            0.5 * (y - a * xi) * (y - a * xi) / (s * s)
        };
        let t = pcn_sample(&model, &potential, 0.4, 40_000, 11).unwrap();
        let logs: Vec<f64> = t.scalar_samples().unwrap()[2000..]
            .iter()
            .map(|x| x.ln())
            .collect();
        let post_var = 1.0 / (1.0 + a * a / (s * s));
        let post_mean = post_var * a * y / (s * s);
        let se = diagnostics::mc_standard_error(&logs);
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        assert!(
            (mean - post_mean).abs() < 3.0 * se,
            "mean {mean} vs {post_mean} (se {se})"
        );
        let var = logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (logs.len() - 1) as f64;
        assert!((var - post_var).abs() < 0.1 * post_var, "var {var} vs {post_var}");
    }

    #[test]
    fn degenerate_pseudo_marginal_matches_random_walk_stream() {
        let prior = ScalarPrior::Uniform { lo: 0.0, hi: 2.0 };
        let ll = |t: f64| -> Result<f64> { Ok(-(t - 1.2) * (t - 1.2) * 30.0) };
        let rw = rw_metropolis(&prior, &ll, 0.3, 4000, 99).unwrap();
        let pm = pseudo_marginal_scalar(
            &prior,
            |t, _i, _rng| ll(t),
            &PseudoMarginalOptions {
                proposal_sd: 0.3,
                solution_count: 1,
                iters: 4000,
                seed: 99,
                init_theta: None,
            },
        )
        .unwrap();
        assert_eq!(rw.scalar_samples().unwrap(), pm.scalar_samples().unwrap());
        assert_eq!(rw.accepted, pm.accepted);
    }

    #[test]
    fn out_of_support_proposals_auto_reject() {
        let prior = ScalarPrior::Uniform { lo: 0.45, hi: 0.55 };
        // large steps leave the support almost always; likelihood flat
        let t = pseudo_marginal_scalar(
            &prior,
            |_t, _i, _rng| Ok(0.0),
            &PseudoMarginalOptions {
                proposal_sd: 10.0,
                solution_count: 1,
                iters: 2000,
                seed: 5,
                init_theta: None,
            },
        )
        .unwrap();
        assert!(t.acceptance_rate() < 0.05);
        for x in t.scalar_samples().unwrap() {
            assert!(*x >= 0.45 && *x <= 0.55);
        }
    }
}
