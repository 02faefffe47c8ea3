//! Desk-scale experiment drivers shared by the CLI and the acceptance
//! suite: forward convergence sweeps, inverse credible-interval sweeps,
//! design optimisation runs and the Allen–Cahn study. Everything is
//! deterministic given the seeds in the request structs.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::collocation::{assemble, Design, ParametricCollocation};
use crate::design::{coordinate_exchange, DesignLoss, DesignProblem};
use crate::geom::{Domain, Point};
use crate::inverse::mcmc::{ChainTrace, ScalarPrior};
use crate::inverse::semilinear::{
    pseudo_marginal_mcmc, LengthscaleMode, LikelihoodKind, SemiLinearConfig,
};
use crate::inverse::{
    grid_posterior, marginal_log_likelihood_from_moments, plug_in_log_likelihood_from_mean,
    trapezoid, NoiseCov, ObservationSet, PosteriorGrid,
};
use crate::kernels::{KernelSpec, OperatorSet};
use crate::problems::{allen_cahn_2d, crude_solutions, CrudeSolutions, ProblemDefinition};
use crate::{Error, Result};

/// Kernel route for the Poisson studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonKernel {
    /// Closed-form solution-space kernel; no boundary rows needed (the
    /// kernel itself satisfies the boundary conditions).
    Natural,
    /// Integral-type kernel over the C2 Wendland base, with trace
    /// observations at both boundary points.
    IntegralWendland,
}

impl PoissonKernel {
    pub fn build(&self, support_scale: f64, quadrature_order: usize) -> Result<KernelSpec> {
        match self {
            PoissonKernel::Natural => KernelSpec::natural_poisson_1d(support_scale),
            PoissonKernel::IntegralWendland => KernelSpec::integral_type(
                KernelSpec::wendland_c2(support_scale, Domain::unit_interval())?,
                quadrature_order,
            ),
        }
    }

    pub fn design(&self, m: usize, domain: &Domain) -> Result<Design> {
        let d = Design::evenly_spaced(m, domain)?;
        match self {
            PoissonKernel::Natural => Ok(d),
            PoissonKernel::IntegralWendland => d.with_boundary(domain.boundary_points(0), domain),
        }
    }
}

/// One forward solve evaluated on a grid.
pub struct ForwardSolution {
    pub grid: Vec<Point>,
    pub mean: DVector<f64>,
    pub variance: DVector<f64>,
    pub exact: Option<DVector<f64>>,
    /// `count × grid` sample paths.
    pub samples: DMatrix<f64>,
}

pub struct ForwardRequest {
    pub kernel: PoissonKernel,
    pub support_scale: f64,
    pub quadrature_order: usize,
    pub m: usize,
    pub grid_points: usize,
    pub sample_count: usize,
    pub seed: u64,
    pub theta: f64,
}

impl Default for ForwardRequest {
    fn default() -> Self {
        ForwardRequest {
            kernel: PoissonKernel::Natural,
            support_scale: 2.5,
            quadrature_order: 40,
            m: 39,
            grid_points: 100,
            sample_count: 20,
            seed: 0,
            theta: 1.0,
        }
    }
}

fn evaluation_grid(n: usize) -> Vec<Point> {
    // n points spanning the closed unit interval
    (0..n).map(|i| Point::one(i as f64 / (n - 1) as f64)).collect()
}

pub fn forward_solution(problem: &ProblemDefinition, req: &ForwardRequest) -> Result<ForwardSolution> {
    if problem.domain.dim() != 1 {
        return Err(Error::Config("forward solves are one-dimensional".into()));
    }
    let kernel = req.kernel.build(req.support_scale, req.quadrature_order)?;
    let design = req.kernel.design(req.m, &problem.domain)?;
    let g = problem.interior_data(design.interior());
    let b = problem.boundary_data(design.boundary());
    let post = assemble(&kernel, &problem.operators, &design, &g, &b, req.theta, 0.0)?;
    let grid = evaluation_grid(req.grid_points);
    let mean = post.posterior_mean(&grid)?;
    let variance = post.posterior_var(&grid)?;
    let samples = post.sample_solution(&grid, req.seed, req.sample_count.max(1))?;
    let exact = problem.exact_solution.map(|f| {
        DVector::from_iterator(grid.len(), grid.iter().map(|p| f(req.theta, p)))
    });
    Ok(ForwardSolution { grid, mean, variance, exact, samples })
}

pub struct ForwardSweepResult {
    pub m_values: Vec<usize>,
    pub l2_errors: Vec<f64>,
    pub sigma2_l1: Vec<f64>,
}

/// Convergence of the conditional measure with the number of design points:
/// the L2 error of the mean against the exact solution and the integrated
/// predictive variance, both on a fixed evaluation grid.
pub fn forward_convergence(
    problem: &ProblemDefinition,
    kernel: PoissonKernel,
    m_values: &[usize],
    grid_points: usize,
    theta: f64,
) -> Result<ForwardSweepResult> {
    let exact = problem
        .exact_solution
        .ok_or_else(|| Error::Config("convergence study needs an exact solution".into()))?;
    let grid = evaluation_grid(grid_points);
    let xs: Vec<f64> = grid.iter().map(|p| p.x()).collect();
    let mut l2_errors = Vec::new();
    let mut sigma2_l1 = Vec::new();
    for &m in m_values {
        let req = ForwardRequest { kernel, m, grid_points, sample_count: 1, theta, ..Default::default() };
        let sol = forward_solution(problem, &req)?;
        let err2: Vec<f64> = (0..grid.len())
            .map(|i| {
                let d = sol.mean[i] - exact(theta, &grid[i]);
                d * d
            })
            .collect();
        l2_errors.push(trapezoid(&xs, &err2).sqrt());
        let var: Vec<f64> = sol.variance.iter().copied().collect();
        sigma2_l1.push(trapezoid(&xs, &var));
    }
    Ok(ForwardSweepResult { m_values: m_values.to_vec(), l2_errors, sigma2_l1 })
}

/// Draw noisy observations of a problem's exact solution.
pub fn synthesize_observations(
    problem: &ProblemDefinition,
    theta0: f64,
    locations: Vec<Point>,
    noise_sd: f64,
    seed: u64,
) -> Result<ObservationSet> {
    let exact = problem
        .exact_solution
        .ok_or_else(|| Error::Config("synthesis needs an exact solution".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = DVector::from_iterator(
        locations.len(),
        locations.iter().map(|p| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            exact(theta0, p) + noise_sd * noise
        }),
    );
    ObservationSet::new(
        locations,
        values,
        NoiseCov::Iso { variance: noise_sd * noise_sd },
        &problem.domain,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodMethod {
    Pmm,
    PlugIn,
}

impl LikelihoodMethod {
    pub fn label(&self) -> &'static str {
        match self {
            LikelihoodMethod::Pmm => "pmm",
            LikelihoodMethod::PlugIn => "plugin",
        }
    }
}

pub struct CredibleSummary {
    pub m: usize,
    pub method: LikelihoodMethod,
    pub posterior: PosteriorGrid,
}

pub struct InverseSweepRequest {
    pub kernel: PoissonKernel,
    pub support_scale: f64,
    pub quadrature_order: usize,
    pub m_values: Vec<usize>,
    pub theta_grid: Vec<f64>,
    pub prior: ScalarPrior,
    pub jitter: f64,
}

impl Default for InverseSweepRequest {
    fn default() -> Self {
        InverseSweepRequest {
            kernel: PoissonKernel::IntegralWendland,
            support_scale: 2.5,
            quadrature_order: 40,
            m_values: vec![5, 10, 20, 40, 80],
            theta_grid: crate::inverse::log_grid(0.25, 4.0, 481),
            prior: ScalarPrior::standard_log_gaussian(),
            jitter: 0.0,
        }
    }
}

/// Grid posteriors for the scalar diffusion parameter under both the
/// marginalised and the plug-in likelihood, for each design size.
pub fn inverse_credible_sweep(
    problem: &ProblemDefinition,
    obs: &ObservationSet,
    req: &InverseSweepRequest,
) -> Result<Vec<CredibleSummary>> {
    let kernel = req.kernel.build(req.support_scale, req.quadrature_order)?;
    let mut out = Vec::new();
    for &m in &req.m_values {
        let design = req.kernel.design(m, &problem.domain)?;
        let g = problem.interior_data(design.interior());
        let b = problem.boundary_data(design.boundary());
        let mut data = DVector::zeros(g.len() + b.len());
        data.rows_mut(0, g.len()).copy_from(&g);
        data.rows_mut(g.len(), b.len()).copy_from(&b);
        let para =
            ParametricCollocation::new(&kernel, &problem.operators, &design, &obs.locations)?;
        for method in [LikelihoodMethod::Pmm, LikelihoodMethod::PlugIn] {
            let posterior = grid_posterior(
                &req.theta_grid,
                |theta| {
                    let (mu, cov) = para.posterior_at(theta, &data, req.jitter)?;
                    match method {
                        LikelihoodMethod::Pmm => {
                            marginal_log_likelihood_from_moments(&mu, &cov, obs)
                        }
                        LikelihoodMethod::PlugIn => plug_in_log_likelihood_from_mean(&mu, obs),
                    }
                },
                |theta| req.prior.log_density(theta),
            )?;
            out.push(CredibleSummary { m, method, posterior });
        }
    }
    Ok(out)
}

pub struct DesignRunResult {
    pub initial: Design,
    pub optimised: Design,
    pub loss_trace: Vec<f64>,
}

pub struct DesignRunRequest {
    pub m: usize,
    pub sweeps: usize,
    pub candidates_per_coord: usize,
    pub seed: u64,
    pub theta: f64,
}

impl Default for DesignRunRequest {
    fn default() -> Self {
        DesignRunRequest { m: 5, sweeps: 3, candidates_per_coord: 16, seed: 0, theta: 1.0 }
    }
}

/// A-optimal redesign of the interior points of the 1D Poisson problem from
/// a random initial configuration.
pub fn poisson_design_run(req: &DesignRunRequest) -> Result<DesignRunResult> {
    let domain = Domain::unit_interval();
    let problem = DesignProblem {
        loss: DesignLoss::AOptimal,
        kernel: KernelSpec::natural_poisson_1d(2.5)?,
        operators: OperatorSet::new(
            crate::kernels::OperatorDescriptor::theta_laplacian(),
            crate::kernels::OperatorDescriptor::BoundaryTrace,
        ),
        evaluation_points: DesignProblem::default_evaluation_points(&domain),
        domain: domain.clone(),
        jitter: 0.0,
    };
    let initial = Design::random_interior(req.m, &domain, req.seed)?;
    let (optimised, loss_trace) = coordinate_exchange(
        &problem,
        &initial,
        req.theta,
        req.sweeps,
        req.candidates_per_coord,
        req.seed,
    )?;
    Ok(DesignRunResult { initial, optimised, loss_trace })
}

pub struct AllenCahnRequest {
    pub m_interior: usize,
    pub boundary_per_edge: usize,
    pub theta0: f64,
    pub noise_sd: f64,
    pub obs_grid: usize,
    pub iters: usize,
    pub seed: u64,
    pub data_seed: u64,
    pub lengthscale: LengthscaleMode,
    pub n_importance: usize,
    pub proposal_sd: f64,
    pub crude_grid_n: usize,
    pub data_grid_n: usize,
    pub prior: ScalarPrior,
}

impl Default for AllenCahnRequest {
    fn default() -> Self {
        AllenCahnRequest {
            m_interior: 20,
            boundary_per_edge: 5,
            theta0: 0.04,
            noise_sd: 0.1,
            obs_grid: 4,
            iters: 10_000,
            seed: 0,
            data_seed: 1,
            lengthscale: LengthscaleMode::Fixed(0.2),
            n_importance: 500,
            proposal_sd: 0.008,
            crude_grid_n: 20,
            data_grid_n: 29,
            prior: ScalarPrior::Uniform { lo: 0.02, hi: 0.15 },
        }
    }
}

pub struct AllenCahnResult {
    pub crude: CrudeSolutions,
    pub observations: ObservationSet,
    pub design: Design,
    pub pmm_trace: ChainTrace,
    pub plugin_trace: ChainTrace,
}

/// Interior design for the unit square: the densest centred lattice with at
/// most `m` nodes, topped up with deterministic low-discrepancy points.
pub fn square_lattice_design(m: usize, per_edge_boundary: usize) -> Result<Design> {
    let domain = Domain::unit_square();
    let side = (m as f64).sqrt().floor() as usize;
    let mut pts = Vec::with_capacity(m);
    for i in 1..=side {
        for j in 1..=side {
            if pts.len() < m {
                pts.push(Point::two(
                    i as f64 / (side + 1) as f64,
                    j as f64 / (side + 1) as f64,
                ));
            }
        }
    }
    // fill the remainder with a golden-ratio sequence offset from the lattice
    let phi = 0.618_033_988_749_894_9_f64;
    let mut k = 1usize;
    while pts.len() < m {
        let cand = Point::two(
            (0.5 + phi * k as f64).fract() * 0.96 + 0.02,
            (0.5 + phi * phi * k as f64).fract() * 0.96 + 0.02,
        );
        if pts.iter().all(|p: &Point| p.dist(&cand) > 1e-3) {
            pts.push(cand);
        }
        k += 1;
    }
    Design::new(pts, domain.boundary_points(per_edge_boundary), &domain)
}

/// The Allen–Cahn inverse study: data from the unstable branch, a
/// pseudo-marginal chain and its plug-in baseline on the same seed.
pub fn allen_cahn_experiment(req: &AllenCahnRequest) -> Result<AllenCahnResult> {
    let problem = allen_cahn_2d();
    // ground truth for data generation: the unstable branch on a finer grid
    // than the in-chain importance centres use
    let truth = crude_solutions(req.theta0, req.data_grid_n, req.data_seed)?;
    let unstable = truth.field(1);
    let obs_locations = problem.domain.interior_grid(req.obs_grid);
    let mut rng = ChaCha8Rng::seed_from_u64(req.data_seed);
    let values = DVector::from_iterator(
        obs_locations.len(),
        obs_locations.iter().map(|p| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            unstable.value_at(p) + req.noise_sd * noise
        }),
    );
    let observations = ObservationSet::new(
        obs_locations,
        values,
        NoiseCov::Iso { variance: req.noise_sd * req.noise_sd },
        &problem.domain,
    )?;
    let design = square_lattice_design(req.m_interior, req.boundary_per_edge)?;

    let mut cfg = SemiLinearConfig::new(design.clone());
    cfg.lengthscale = req.lengthscale;
    cfg.importance.n_importance = req.n_importance;
    cfg.likelihood = LikelihoodKind::PseudoMarginal;
    cfg.proposal_sd = req.proposal_sd;
    cfg.iters = req.iters;
    cfg.seed = req.seed;
    cfg.crude_grid_n = req.crude_grid_n;
    let pmm_trace = pseudo_marginal_mcmc(&problem, &req.prior, &observations, &cfg)?;

    let mut plug_cfg = cfg.clone();
    plug_cfg.likelihood = LikelihoodKind::PlugIn;
    let plugin_trace = pseudo_marginal_mcmc(&problem, &req.prior, &observations, &plug_cfg)?;

    // crude solutions at the data-generating parameter, reported at the
    // in-chain resolution
    let crude = crude_solutions(req.theta0, req.crude_grid_n, req.seed)?;
    Ok(AllenCahnResult { crude, observations, design, pmm_trace, plugin_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::poisson_1d;

    #[test]
    fn forward_solution_has_exact_column_when_available() {
        let problem = poisson_1d();
        let req = ForwardRequest { m: 12, grid_points: 21, sample_count: 3, ..Default::default() };
        let sol = forward_solution(&problem, &req).unwrap();
        assert!(sol.exact.is_some());
        assert_eq!(sol.samples.nrows(), 3);
        assert_eq!(sol.samples.ncols(), 21);
    }

    #[test]
    fn synthesized_observations_are_seed_deterministic() {
        let problem = crate::problems::parametric_poisson_1d();
        let locs = vec![Point::one(0.25), Point::one(0.75)];
        let a = synthesize_observations(&problem, 1.0, locs.clone(), 1e-3, 7).unwrap();
        let b = synthesize_observations(&problem, 1.0, locs, 1e-3, 7).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn square_lattice_design_counts() {
        let d = square_lattice_design(20, 5).unwrap();
        assert_eq!(d.interior().len(), 20);
        assert_eq!(d.boundary().len(), 20);
    }
}
