//! Latent-variable treatment of semi-linear PDEs and the pseudo-marginal
//! sampler built on it.
//!
//! For an operator splitting `A = A1 + A2` with `A1` linear differential and
//! `A2` pointwise monotonic, introducing the latent interior values
//! `z = A1 u` turns the non-linear observations `A u = g` into two linear
//! blocks: `A1 u = z` and `u = A2⁻¹(g - z)`. Conditioning on both plus the
//! boundary trace is ordinary collocation; the data-likelihood then requires
//! marginalising `z`, which is done by importance sampling inside a
//! pseudo-marginal Metropolis–Hastings chain. With multiple PDE solutions,
//! the chain also carries a solution index whose proposal is uniform; the
//! importance density is centred on a coarse finite-difference approximation
//! of the indexed solution.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::collocation::{assemble_rows, CollocationPosterior, Design, Functional};
use crate::inverse::mcmc::{ChainSamples, ChainTrace, ScalarPrior};
use crate::inverse::ObservationSet;
use crate::kernels::{eval_operator_kernel, KernelSpec, OperatorDescriptor};
use crate::linalg;
use crate::problems::{crude_solutions, CrudeSolutions, ProblemDefinition, SemiLinearSplit};
use crate::{Error, Result};

/// Gaussian conditional measure for a semi-linear system given latent
/// interior values `z`: conditions on `A1 u = z` and `u = A2⁻¹(g - z)` at
/// the interior points and the trace data on the boundary.
pub fn semi_linear_posterior(
    kernel: &KernelSpec,
    split: &SemiLinearSplit,
    boundary_op: &OperatorDescriptor,
    design: &Design,
    g: &DVector<f64>,
    b: &DVector<f64>,
    z: &DVector<f64>,
    theta: f64,
    jitter: f64,
) -> Result<CollocationPosterior> {
    let m = design.interior().len();
    if z.len() != m || g.len() != m {
        return Err(Error::Config("z and g must have one entry per interior point".into()));
    }
    if b.len() != design.boundary().len() {
        return Err(Error::Config("boundary data length mismatch".into()));
    }
    let mut rows = Vec::with_capacity(2 * m + b.len());
    for p in design.interior() {
        rows.push(Functional { op: split.linear_part.clone(), point: *p });
    }
    for p in design.interior() {
        rows.push(Functional { op: OperatorDescriptor::Identity, point: *p });
    }
    for p in design.boundary() {
        rows.push(Functional { op: boundary_op.clone(), point: *p });
    }
    let mut data = DVector::zeros(rows.len());
    for j in 0..m {
        data[j] = z[j];
        data[m + j] = split
            .pointwise
            .inverse(theta, g[j] - z[j])
            .ok_or(Error::LatentRejection)?;
    }
    for j in 0..b.len() {
        data[2 * m + j] = b[j];
    }
    assemble_rows(kernel, rows, split.linear_part.clone(), data, theta, jitter)
}

/// Precomputed, `z`-independent pieces of the latent likelihood at one
/// `(θ, kernel)` pair. Only the conditional mean depends on `z`, so each
/// importance draw costs one matrix-vector product and one triangular solve.
pub(crate) struct LatentMachine {
    w: DMatrix<f64>,
    s_chol: Cholesky<f64, Dyn>,
    s_logdet: f64,
    gamma_chol: Cholesky<f64, Dyn>,
    gamma_logdet: f64,
    y: DVector<f64>,
    g: DVector<f64>,
    b: DVector<f64>,
    theta: f64,
    pointwise: crate::problems::PointwiseOp,
    m: usize,
}

impl LatentMachine {
    pub(crate) fn build(
        kernel: &KernelSpec,
        split: &SemiLinearSplit,
        boundary_op: &OperatorDescriptor,
        design: &Design,
        g: &DVector<f64>,
        b: &DVector<f64>,
        obs: &ObservationSet,
        theta: f64,
        jitter: f64,
    ) -> Result<Self> {
        let m = design.interior().len();
        let mb = design.boundary().len();
        let n_rows = 2 * m + mb;
        let mut rows = Vec::with_capacity(n_rows);
        for p in design.interior() {
            rows.push(Functional { op: split.linear_part.clone(), point: *p });
        }
        for p in design.interior() {
            rows.push(Functional { op: OperatorDescriptor::Identity, point: *p });
        }
        for p in design.boundary() {
            rows.push(Functional { op: boundary_op.clone(), point: *p });
        }
        let mut gram = DMatrix::zeros(n_rows, n_rows);
        for i in 0..n_rows {
            for j in 0..=i {
                let v = eval_operator_kernel(
                    kernel,
                    &rows[i].op,
                    &rows[j].op,
                    &rows[i].point,
                    &rows[j].point,
                    theta,
                )?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let factor = linalg::jittered_cholesky(&gram, jitter)?;
        let n_obs = obs.len();
        let mut cross = DMatrix::zeros(n_obs, n_rows);
        for (i, x) in obs.locations.iter().enumerate() {
            for (j, r) in rows.iter().enumerate() {
                cross[(i, j)] = eval_operator_kernel(
                    kernel,
                    &OperatorDescriptor::Identity,
                    &r.op,
                    x,
                    &r.point,
                    theta,
                )?;
            }
        }
        let solved = factor.chol.solve(&cross.transpose());
        let w = solved.transpose();
        let mut prior = DMatrix::zeros(n_obs, n_obs);
        for i in 0..n_obs {
            for j in 0..=i {
                let v = eval_operator_kernel(
                    kernel,
                    &OperatorDescriptor::Identity,
                    &OperatorDescriptor::Identity,
                    &obs.locations[i],
                    &obs.locations[j],
                    theta,
                )?;
                prior[(i, j)] = v;
                prior[(j, i)] = v;
            }
        }
        let sigma = linalg::symmetrize(&(prior - &w * cross.transpose()));
        let s = &sigma + obs.noise.matrix(n_obs);
        let s_factor = linalg::jittered_cholesky(&s, 0.0)?;
        let s_logdet: f64 =
            (0..n_obs).map(|i| s_factor.chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        let gamma = obs.noise.matrix(n_obs);
        let gamma_factor = linalg::jittered_cholesky(&gamma, 0.0)?;
        let gamma_logdet: f64 =
            (0..n_obs).map(|i| gamma_factor.chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        Ok(LatentMachine {
            w,
            s_chol: s_factor.chol,
            s_logdet,
            gamma_chol: gamma_factor.chol,
            gamma_logdet,
            y: obs.values.clone(),
            g: g.clone(),
            b: b.clone(),
            theta,
            pointwise: split.pointwise,
            m,
        })
    }

    fn data_vector(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        let m = self.m;
        let mut data = DVector::zeros(self.w.ncols());
        for j in 0..m {
            data[j] = z[j];
            data[m + j] = self.pointwise.inverse(self.theta, self.g[j] - z[j])?;
        }
        for j in 0..self.b.len() {
            data[2 * m + j] = self.b[j];
        }
        Some(data)
    }

    fn conditional_mean(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.w * self.data_vector(z)?)
    }

    /// `log ∫ π(y|u) π(u|z, g, b) du = log N(y; μ_z, Σ + Γ)`;
    /// `-inf` when the pointwise inverse rejects `z`.
    pub(crate) fn log_marginal_given_z(&self, z: &DVector<f64>) -> f64 {
        let Some(mu) = self.conditional_mean(z) else {
            return f64::NEG_INFINITY;
        };
        let r = &self.y - mu;
        let n = r.len() as f64;
        match self.s_chol.l_dirty().solve_lower_triangular(&r) {
            Some(half) => {
                -0.5 * half.norm_squared()
                    - 0.5 * self.s_logdet
                    - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
            }
            None => f64::NEG_INFINITY,
        }
    }

    /// Plug-in variant: solver covariance dropped, `log N(y; μ_z, Γ)`.
    pub(crate) fn log_plugin_given_z(&self, z: &DVector<f64>) -> f64 {
        let Some(mu) = self.conditional_mean(z) else {
            return f64::NEG_INFINITY;
        };
        let r = &self.y - mu;
        let n = r.len() as f64;
        match self.gamma_chol.l_dirty().solve_lower_triangular(&r) {
            Some(half) => {
                -0.5 * half.norm_squared()
                    - 0.5 * self.gamma_logdet
                    - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
            }
            None => f64::NEG_INFINITY,
        }
    }
}

/// Gaussian importance density over the latent vector: a centre and a
/// sampling factor `L`, so draws are `z = centre + L ξ` with standard normal
/// `ξ` and the density is evaluated through `ξ` directly.
#[derive(Debug, Clone)]
pub struct LatentImportance {
    pub center: DVector<f64>,
    factor: DMatrix<f64>,
    log_det_factor: f64,
}

impl LatentImportance {
    /// Isotropic spread `c` in every latent direction.
    pub fn isotropic(center: DVector<f64>, c: f64) -> Self {
        let m = center.len();
        LatentImportance {
            center,
            factor: DMatrix::identity(m, m) * c,
            log_det_factor: m as f64 * c.ln(),
        }
    }

    /// Covariance shaped by a (linearised) latent precision `P`: the
    /// importance covariance is `scale² (P + I/wide_sd²)⁻¹`, matching the
    /// identified directions of the latent conditional and falling back to
    /// `wide_sd` in its null directions. With fewer observations than latent
    /// dimensions an isotropic density wastes almost every draw; this shape
    /// is what keeps the estimator variance workable.
    pub fn shaped(center: DVector<f64>, precision: &DMatrix<f64>, wide_sd: f64, scale: f64) -> Self {
        let m = center.len();
        let mut prec = crate::linalg::symmetrize(precision);
        let tau2_inv = 1.0 / (wide_sd * wide_sd);
        for i in 0..m {
            prec[(i, i)] += tau2_inv;
        }
        let eig = prec.symmetric_eigen();
        let mut factor = eig.eigenvectors.clone();
        let mut log_det = 0.0;
        for (j, lam) in eig.eigenvalues.iter().enumerate() {
            let sd = scale / lam.max(tau2_inv * 1e-12).sqrt();
            factor.column_mut(j).scale_mut(sd);
            log_det += sd.ln();
        }
        LatentImportance { center, factor, log_det_factor: log_det }
    }

    fn draw(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.center + &self.factor * xi
    }

    /// `log r(z)` for `z = centre + L ξ`.
    fn log_density_of_draw(&self, xi: &DVector<f64>) -> f64 {
        let m = self.center.len() as f64;
        -0.5 * xi.norm_squared() - 0.5 * m * (2.0 * std::f64::consts::PI).ln()
            - self.log_det_factor
    }
}

/// One pseudo-marginal likelihood estimate.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// Log of the averaged unbiased estimate (unnormalised: the flat latent
    /// measure leaves a common constant that cancels in acceptance ratios).
    pub log_estimate: f64,
    /// Fraction of importance draws that produced a finite weight.
    pub finite_fraction: f64,
}

/// Average `n_importance` single-draw unbiased estimates of the intractable
/// data-likelihood at fixed `θ`, importance-sampling the latent vector.
/// When every draw is rejected the estimate is zero (`log = -inf`) and the
/// caller sees it in `finite_fraction`.
#[allow(clippy::too_many_arguments)]
pub fn pseudo_marginal_estimate(
    kernel: &KernelSpec,
    split: &SemiLinearSplit,
    boundary_op: &OperatorDescriptor,
    design: &Design,
    g: &DVector<f64>,
    b: &DVector<f64>,
    obs: &ObservationSet,
    theta: f64,
    importance: &LatentImportance,
    n_importance: usize,
    seed: u64,
    jitter: f64,
) -> Result<EstimateReport> {
    if n_importance == 0 {
        return Err(Error::Config("need at least one importance draw".into()));
    }
    let machine =
        LatentMachine::build(kernel, split, boundary_op, design, g, b, obs, theta, jitter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(estimate_with_machine(&machine, importance, n_importance, &mut rng))
}

fn estimate_with_machine(
    machine: &LatentMachine,
    importance: &LatentImportance,
    n_importance: usize,
    rng: &mut ChaCha8Rng,
) -> EstimateReport {
    let m = importance.center.len();
    // pre-draw so the parallel reduction is deterministic in the seed
    let draws: Vec<DVector<f64>> = (0..n_importance)
        .map(|_| DVector::from_fn(m, |_, _| StandardNormal.sample(rng)))
        .collect();
    let terms: Vec<f64> = draws
        .par_iter()
        .map(|xi| {
            let z = importance.draw(xi);
            let lq = machine.log_marginal_given_z(&z);
            if lq == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            lq - importance.log_density_of_draw(xi)
        })
        .collect();
    let finite = terms.iter().filter(|t| t.is_finite()).count();
    EstimateReport {
        log_estimate: linalg::log_sum_exp(&terms) - (n_importance as f64).ln(),
        finite_fraction: finite as f64 / n_importance as f64,
    }
}

/// Length-scale handling for the kernel inside the sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthscaleMode {
    Fixed(f64),
    /// Degenerate prior: behaves exactly like `Fixed` (and consumes the same
    /// random stream), kept as a distinct constructor for configuration
    /// clarity.
    PointMass(f64),
    /// Standard half-Cauchy prior, sampled by a random walk on `log ℓ`
    /// within the chain.
    HalfCauchy { init: f64, proposal_sd: f64 },
}

impl LengthscaleMode {
    fn initial(&self) -> f64 {
        match *self {
            LengthscaleMode::Fixed(l) | LengthscaleMode::PointMass(l) => l,
            LengthscaleMode::HalfCauchy { init, .. } => init,
        }
    }

    fn is_sampled(&self) -> bool {
        matches!(self, LengthscaleMode::HalfCauchy { .. })
    }
}

/// `log p(ℓ)` for the standard half-Cauchy prior, up to a constant.
pub fn half_cauchy_log_density(l: f64) -> f64 {
    if l <= 0.0 {
        f64::NEG_INFINITY
    } else {
        -(1.0 + l * l).ln()
    }
}

#[derive(Debug, Clone)]
pub struct ImportanceConfig {
    pub n_importance: usize,
    /// Isotropic importance standard deviation; `None` asks the sampler to
    /// tune it on a pilot run so that at least `min_finite_fraction` of
    /// draws carry finite weight.
    pub cov_scale: Option<f64>,
    pub min_finite_fraction: f64,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig { n_importance: 500, cov_scale: None, min_finite_fraction: 0.2 }
    }
}

/// Which likelihood the chain runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodKind {
    /// Importance-averaged unbiased estimates (the full method).
    PseudoMarginal,
    /// Deterministic baseline: conditional mean at the importance centre
    /// plugged into the noise model, solver covariance discarded.
    PlugIn,
}

#[derive(Debug, Clone)]
pub struct SemiLinearConfig {
    pub design: Design,
    pub lengthscale: LengthscaleMode,
    pub importance: ImportanceConfig,
    pub likelihood: LikelihoodKind,
    pub proposal_sd: f64,
    pub iters: usize,
    pub seed: u64,
    pub jitter: f64,
    /// Grid resolution of the coarse Newton solutions backing the
    /// importance centres.
    pub crude_grid_n: usize,
    /// Coarse solutions are cached on a `θ`-lattice of this pitch and looked
    /// up by nearest node; the centres only need to be crude.
    pub crude_theta_step: f64,
}

impl SemiLinearConfig {
    pub fn new(design: Design) -> Self {
        SemiLinearConfig {
            design,
            lengthscale: LengthscaleMode::Fixed(0.2),
            importance: ImportanceConfig::default(),
            likelihood: LikelihoodKind::PseudoMarginal,
            proposal_sd: 0.01,
            iters: 10_000,
            seed: 0,
            jitter: 0.0,
            crude_grid_n: 20,
            crude_theta_step: 0.002,
        }
    }
}

struct CrudeCache {
    step: f64,
    grid_n: usize,
    seed: u64,
    solutions: BTreeMap<i64, CrudeSolutions>,
    centers: BTreeMap<(i64, usize), DVector<f64>>,
}

impl CrudeCache {
    fn key(&self, theta: f64) -> i64 {
        (theta / self.step).round() as i64
    }

    fn center(
        &mut self,
        theta: f64,
        index: usize,
        split: &SemiLinearSplit,
        design: &Design,
    ) -> Result<DVector<f64>> {
        let key = self.key(theta);
        if let Some(c) = self.centers.get(&(key, index)) {
            return Ok(c.clone());
        }
        if !self.solutions.contains_key(&key) {
            let snapped = key as f64 * self.step;
            let sols = crude_solutions(snapped.max(self.step), self.grid_n, self.seed)?;
            self.solutions.insert(key, sols);
        }
        let sols = &self.solutions[&key];
        let field = sols.field(index);
        // z = A1 u at the interior design points, with the Laplacian taken
        // by finite differences on the coarse grid
        let theta_snapped = sols.theta;
        let terms = split.linear_part.flatten();
        let mut z = DVector::zeros(design.interior().len());
        for (j, p) in design.interior().iter().enumerate() {
            let mut v = 0.0;
            for (c, pow, d) in &terms {
                let factor = c * theta_snapped.powi(*pow);
                v += factor
                    * match d {
                        crate::kernels::ArgDeriv::None => field.value_at(p),
                        crate::kernels::ArgDeriv::Laplacian => field.laplacian_at(p),
                    };
            }
            z[j] = v;
        }
        self.centers.insert((key, index), z.clone());
        Ok(z)
    }
}

/// Pseudo-marginal Metropolis–Hastings over `(θ, solution index)` — and the
/// kernel length scale when `HalfCauchy` is selected — for a semi-linear
/// problem with a squared-exponential reference kernel.
///
/// Per iteration: a joint symmetric proposal on `(θ, i)` is accepted against
/// the retained likelihood estimate; with a sampled length scale, a second
/// block updates `log ℓ` by a random walk, drawing a fresh estimate at the
/// proposed scale. Rejected proposals keep the retained estimate unchanged.
pub fn pseudo_marginal_mcmc(
    problem: &ProblemDefinition,
    prior: &ScalarPrior,
    obs: &ObservationSet,
    cfg: &SemiLinearConfig,
) -> Result<ChainTrace> {
    let split = problem.semi_linear.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "problem '{}' has no semi-linear split; use grid or pCN inference",
            problem.name
        ))
    })?;
    prior.validate()?;
    if !(cfg.proposal_sd > 0.0) {
        return Err(Error::Config("proposal sd must be positive".into()));
    }
    let s_count = problem.solution_count.max(1);
    let g = problem.interior_data(cfg.design.interior());
    let b = problem.boundary_data(cfg.design.boundary());
    let mut cache = CrudeCache {
        step: cfg.crude_theta_step,
        grid_n: cfg.crude_grid_n,
        seed: cfg.seed,
        solutions: BTreeMap::new(),
        centers: BTreeMap::new(),
    };
    let kernel_at = |l: f64| -> Result<KernelSpec> {
        KernelSpec::squared_exponential(l, problem.domain.clone())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = prior.midpoint();
    let mut index = (s_count - 1) / 2;
    let mut ell = cfg.lengthscale.initial();

    // pilot-tune the importance spread if not pinned
    let mut cov_scale = cfg.importance.cov_scale.unwrap_or(1.0);
    if cfg.importance.cov_scale.is_none() {
        let machine = LatentMachine::build(
            &kernel_at(ell)?,
            split,
            &problem.operators.boundary,
            &cfg.design,
            &g,
            &b,
            obs,
            theta,
            cfg.jitter,
        )?;
        let center = cache.center(theta, index, split, &cfg.design)?;
        for _ in 0..8 {
            let rep = estimate_with_machine(
                &machine,
                &LatentImportance { center: center.clone(), cov_scale },
                32,
                &mut rng,
            );
            if rep.finite_fraction >= cfg.importance.min_finite_fraction {
                break;
            }
            cov_scale *= 0.5;
        }
    }

    // returns -inf (soft rejection) when the proposed state cannot be
    // assembled; the initial state must be assemblable
    let evaluate = |theta: f64,
                    index: usize,
                    ell: f64,
                    cache: &mut CrudeCache,
                    rng: &mut ChaCha8Rng|
     -> Result<f64> {
        let kernel = kernel_at(ell)?;
        let machine = match LatentMachine::build(
            &kernel,
            split,
            &problem.operators.boundary,
            &cfg.design,
            &g,
            &b,
            obs,
            theta,
            cfg.jitter,
        ) {
            Ok(m) => m,
            Err(Error::IllConditioned { .. }) => return Ok(f64::NEG_INFINITY),
            Err(e) => return Err(e),
        };
        let center = cache.center(theta, index, split, &cfg.design)?;
        match cfg.likelihood {
            LikelihoodKind::PseudoMarginal => {
                let rep = estimate_with_machine(
                    &machine,
                    &LatentImportance { center, cov_scale },
                    cfg.importance.n_importance,
                    rng,
                );
                Ok(rep.log_estimate)
            }
            LikelihoodKind::PlugIn => Ok(machine.log_plugin_given_z(&center)),
        }
    };

    let mut log_est = evaluate(theta, index, ell, &mut cache, &mut rng)?;
    if log_est == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "initial chain state has a zero likelihood estimate".into(),
        ));
    }
    let mut lp = prior.log_density(theta);
    if lp == f64::NEG_INFINITY {
        return Err(Error::Config("initial theta outside the prior support".into()));
    }

    let mut samples = Vec::with_capacity(cfg.iters);
    let mut log_like = Vec::with_capacity(cfg.iters);
    let mut accepted = Vec::with_capacity(cfg.iters);
    let mut indices = Vec::with_capacity(cfg.iters);
    let mut ells = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        // block 1: (theta, index)
        let noise: f64 = StandardNormal.sample(&mut rng);
        let theta_prop = theta + cfg.proposal_sd * noise;
        let index_prop = if s_count > 1 { rng.gen_range(0..s_count) } else { 0 };
        let lp_prop = prior.log_density(theta_prop);
        let mut accept = false;
        if lp_prop > f64::NEG_INFINITY {
            let est_prop = evaluate(theta_prop, index_prop, ell, &mut cache, &mut rng)?;
            let log_alpha = lp_prop + est_prop - lp - log_est;
            let u: f64 = rng.gen();
            if u.ln() < log_alpha {
                theta = theta_prop;
                index = index_prop;
                log_est = est_prop;
                lp = lp_prop;
                accept = true;
            }
        }

        // block 2: length scale, random walk on log ℓ with half-Cauchy prior
        if let LengthscaleMode::HalfCauchy { proposal_sd, .. } = cfg.lengthscale {
            let step: f64 = StandardNormal.sample(&mut rng);
            let ell_prop = (ell.ln() + proposal_sd * step).exp();
            let est_prop = evaluate(theta, index, ell_prop, &mut cache, &mut rng)?;
            // Jacobian of the log-scale walk folds into the prior ratio
            let log_alpha = half_cauchy_log_density(ell_prop) + ell_prop.ln() + est_prop
                - half_cauchy_log_density(ell)
                - ell.ln()
                - log_est;
            let u: f64 = rng.gen();
            if u.ln() < log_alpha {
                ell = ell_prop;
                log_est = est_prop;
            }
        }

        samples.push(theta);
        log_like.push(log_est);
        accepted.push(accept);
        indices.push(index);
        ells.push(ell);
    }
    Ok(ChainTrace {
        samples: ChainSamples::Scalar(samples),
        log_like,
        accepted,
        solution_indices: Some(indices),
        lengthscales: if cfg.lengthscale.is_sampled() { Some(ells) } else { None },
        rng_seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::assemble;
    use crate::geom::{Domain, Point};
    use crate::kernels::{CoefExpr, OperatorSet};
    use crate::problems::PointwiseOp;

    fn identity_split() -> SemiLinearSplit {
        // A = A1 + I with A1 = θ∇² - I, i.e. the plain parametric Poisson
        // operator in disguise; the pointwise part is linear so the latent
        // construction can be cross-checked against a dense build.
        SemiLinearSplit {
            linear_part: OperatorDescriptor::LinearCombination(vec![
                (CoefExpr::ThetaTimes(1.0), OperatorDescriptor::Laplacian),
                (CoefExpr::Const(-1.0), OperatorDescriptor::Identity),
            ]),
            pointwise: PointwiseOp::Identity,
        }
    }

    #[test]
    fn latent_posterior_matches_direct_two_block_assembly() {
        let domain = Domain::unit_interval();
        let base = KernelSpec::wendland_c2(2.5, domain.clone()).unwrap();
        let kernel = KernelSpec::integral_type(base, 24).unwrap();
        let split = identity_split();
        let design = Design::evenly_spaced(5, &domain)
            .unwrap()
            .with_boundary(domain.boundary_points(0), &domain)
            .unwrap();
        let g = DVector::from_iterator(
            5,
            design.interior().iter().map(|p| -(2.0 * std::f64::consts::PI * p.x()).sin()),
        );
        let b = DVector::zeros(2);
        let z = 0.5 * &g;
        let theta = 1.0;
        let post =
            semi_linear_posterior(&kernel, &split, &OperatorDescriptor::BoundaryTrace, &design, &g, &b, &z, theta, 0.0)
                .unwrap();

        // direct construction: interior A1-observations with data z at the
        // design points, plus identity observations with data g - z
        let ops = OperatorSet::new(split.linear_part.clone(), OperatorDescriptor::Identity);
        let mut pts = design.interior().to_vec();
        pts.extend_from_slice(design.boundary());
        let direct_design = Design::new(
            design.interior().to_vec(),
            design.boundary().to_vec(),
            &domain,
        )
        .unwrap();
        let _ = (ops, pts, direct_design); // the cross-check below goes through assemble_rows

        use crate::collocation::{assemble_rows, Functional};
        let mut rows = Vec::new();
        for p in design.interior() {
            rows.push(Functional { op: split.linear_part.clone(), point: *p });
        }
        for p in design.interior() {
            rows.push(Functional { op: OperatorDescriptor::Identity, point: *p });
        }
        for p in design.boundary() {
            rows.push(Functional { op: OperatorDescriptor::BoundaryTrace, point: *p });
        }
        let mut data = DVector::zeros(rows.len());
        for j in 0..5 {
            data[j] = z[j];
            data[5 + j] = g[j] - z[j];
        }
        let dense =
            assemble_rows(&kernel, rows, split.linear_part.clone(), data, theta, 0.0).unwrap();

        let xs: Vec<Point> = (1..20).map(|i| Point::one(i as f64 / 20.0)).collect();
        let m1 = post.posterior_mean(&xs).unwrap();
        let m2 = dense.posterior_mean(&xs).unwrap();
        assert!((m1 - m2).amax() < 1e-10);
        let c1 = post.posterior_cov(&xs).unwrap();
        let c2 = dense.posterior_cov(&xs).unwrap();
        assert!((c1 - c2).amax() < 1e-10);
    }

    #[test]
    fn zero_effective_data_gives_vanishing_interior_mean() {
        let domain = Domain::unit_interval();
        let base = KernelSpec::wendland_c2(2.5, domain.clone()).unwrap();
        let kernel = KernelSpec::integral_type(base, 24).unwrap();
        let split = identity_split();
        let design = Design::evenly_spaced(4, &domain)
            .unwrap()
            .with_boundary(domain.boundary_points(0), &domain)
            .unwrap();
        // g - z ≡ 0 and z ≡ 0: all observation blocks are zero
        let g = DVector::zeros(4);
        let z = DVector::zeros(4);
        let b = DVector::zeros(2);
        let post = semi_linear_posterior(
            &kernel,
            &split,
            &OperatorDescriptor::BoundaryTrace,
            &design,
            &g,
            &b,
            &z,
            1.0,
            0.0,
        )
        .unwrap();
        let xs: Vec<Point> = (1..10).map(|i| Point::one(i as f64 / 10.0)).collect();
        let mu = post.posterior_mean(&xs).unwrap();
        assert!(mu.amax() < 1e-12);
    }

    #[test]
    fn cube_inverse_identity() {
        let a2 = PointwiseOp::ScaledCube;
        let theta = 0.7;
        for u in [-1.0_f64, 0.0, 1.0] {
            let w = a2.inverse(theta, a2.apply(theta, u)).unwrap();
            assert!((w - u).abs() < 1e-14);
        }
    }

    #[test]
    fn common_positive_factor_on_estimates_leaves_the_chain_invariant() {
        // A units change multiplies every likelihood estimate by the same
        // positive constant; only ratios enter the acceptance rule, so the
        // chain must be bitwise identical.
        use crate::inverse::mcmc::{pseudo_marginal_scalar, PseudoMarginalOptions};
        let prior = ScalarPrior::Uniform { lo: 0.0, hi: 2.0 };
        let base = |t: f64| -30.0 * (t - 1.1) * (t - 1.1);
        let opts = PseudoMarginalOptions {
            proposal_sd: 0.25,
            solution_count: 3,
            iters: 3000,
            seed: 21,
            init_theta: None,
        };
        let run = |offset: f64| {
            pseudo_marginal_scalar(&prior, |t, _i, _rng| Ok(base(t) + offset), &opts).unwrap()
        };
        let a = run(0.0);
        let b = run(987.654); // log of the common positive factor
        assert_eq!(a.scalar_samples().unwrap(), b.scalar_samples().unwrap());
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.solution_indices, b.solution_indices);
    }

    #[test]
    fn all_rejecting_importance_reports_zero_estimate() {
        // a pointwise map with no valid inverse everywhere is not part of the
        // built-ins; emulate total rejection with an empty-support prior by
        // checking the -inf path through log_sum_exp
        let terms = vec![f64::NEG_INFINITY; 4];
        assert_eq!(crate::linalg::log_sum_exp(&terms), f64::NEG_INFINITY);
    }

    #[test]
    fn latent_rejection_error_surfaces() {
        let domain = Domain::unit_interval();
        let kernel = KernelSpec::squared_exponential(0.3, domain.clone()).unwrap();
        let design = Design::evenly_spaced(3, &domain).unwrap();
        let g = DVector::zeros(3);
        let z = DVector::zeros(3);
        // identity pointwise map never rejects; assert the Ok path here and
        // the rejection signal is covered by the machine's -inf path
        let split = identity_split();
        let r = semi_linear_posterior(
            &kernel,
            &split,
            &OperatorDescriptor::BoundaryTrace,
            &design,
            &g,
            &DVector::zeros(0),
            &z,
            1.0,
            0.0,
        );
        assert!(r.is_ok());
        let _ = assemble; // silence unused import in some cfg combinations
    }
}
