//! Symmetric-collocation conditional measures.
//!
//! Conditioning a Gaussian prior over the solution on observed functionals
//! (interior operator values and boundary traces at the design points) gives
//! a Gaussian posterior whose mean is the classical symmetric-collocation
//! interpolant and whose covariance quantifies the remaining discretisation
//! uncertainty. The Gram matrix is factorised once per assembly and every
//! posterior query is a triangular solve against the retained factor; the
//! explicit inverse is never formed.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geom::{Domain, Point};
use crate::kernels::{eval_operator_kernel, KernelSpec, OperatorDescriptor, OperatorSet};
use crate::linalg::{self, JitteredCholesky};
use crate::{Error, Result};

/// Largest admissible negative predictive variance; anything lower raises an
/// error, since it signals broken kernel derivatives rather than round-off.
pub const VARIANCE_CLAMP: f64 = 1e-10;

/// Collocation points: interior locations for the differential operator and
/// boundary locations for the trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    interior: Vec<Point>,
    boundary: Vec<Point>,
}

impl Design {
    /// Validates strict interior/boundary membership and pairwise
    /// separation; coincident points make the Gram matrix exactly singular.
    pub fn new(interior: Vec<Point>, boundary: Vec<Point>, domain: &Domain) -> Result<Self> {
        for p in &interior {
            domain.validate_point_dim(p)?;
            if !domain.contains_interior(p) {
                return Err(Error::Domain(format!(
                    "interior design point {p} is not strictly inside the domain"
                )));
            }
        }
        for p in &boundary {
            domain.validate_point_dim(p)?;
            if !domain.on_boundary(p, 1e-9) {
                return Err(Error::Domain(format!(
                    "boundary design point {p} does not lie on the boundary"
                )));
            }
        }
        let all: Vec<&Point> = interior.iter().chain(boundary.iter()).collect();
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                if all[i].dist(all[j]) <= 1e-12 {
                    return Err(Error::Domain(format!(
                        "design points {} and {} coincide",
                        all[i], all[j]
                    )));
                }
            }
        }
        Ok(Design { interior, boundary })
    }

    /// `m` evenly spaced interior points (`j/(m+1)` pattern per axis).
    pub fn evenly_spaced(m: usize, domain: &Domain) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::Config("evenly_spaced is one-dimensional".into()));
        }
        Design::new(domain.interior_grid(m), Vec::new(), domain)
    }

    pub fn with_boundary(mut self, boundary: Vec<Point>, domain: &Domain) -> Result<Self> {
        self.boundary = boundary;
        Design::new(self.interior, self.boundary, domain)
    }

    /// Uniformly random interior points, reproducible by seed.
    pub fn random_interior(m: usize, domain: &Domain, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(m);
        let mut guard = 0;
        while pts.len() < m {
            guard += 1;
            if guard > 100 * m + 1000 {
                return Err(Error::NonConvergence(
                    "could not draw enough separated interior points".into(),
                ));
            }
            let p = match domain {
                Domain::Interval { lo, hi } => {
                    Point::one(lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng))
                }
                Domain::Rect { lo, hi } => Point::two(
                    lo[0] + (hi[0] - lo[0]) * rand::Rng::gen::<f64>(&mut rng),
                    lo[1] + (hi[1] - lo[1]) * rand::Rng::gen::<f64>(&mut rng),
                ),
                Domain::UnitDisc => Point::two(
                    2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0,
                    2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0,
                ),
            };
            if domain.contains_interior(&p)
                && pts.iter().all(|q: &Point| q.dist(&p) > 1e-6)
            {
                pts.push(p);
            }
        }
        Design::new(pts, Vec::new(), domain)
    }

    pub fn interior(&self) -> &[Point] {
        &self.interior
    }

    pub fn boundary(&self) -> &[Point] {
        &self.boundary
    }

    pub fn replace_interior(&self, idx: usize, p: Point, domain: &Domain) -> Result<Self> {
        let mut interior = self.interior.clone();
        interior[idx] = p;
        Design::new(interior, self.boundary.clone(), domain)
    }
}

/// One observed linear functional: an operator applied at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub op: OperatorDescriptor,
    pub point: Point,
}

/// The Gaussian conditional measure produced by [`assemble`].
pub struct CollocationPosterior {
    kernel: KernelSpec,
    rows: Vec<Functional>,
    /// Operator used to build representer test functions for the local error
    /// bound diagnostic.
    rep_op: OperatorDescriptor,
    theta: f64,
    gram: DMatrix<f64>,
    factor: JitteredCholesky,
    weights: DVector<f64>,
    data: DVector<f64>,
}

/// Condition on interior observations `g` and boundary observations `b`.
pub fn assemble(
    kernel: &KernelSpec,
    operators: &OperatorSet,
    design: &Design,
    g: &DVector<f64>,
    b: &DVector<f64>,
    theta: f64,
    jitter: f64,
) -> Result<CollocationPosterior> {
    if g.len() != design.interior().len() {
        return Err(Error::Config(format!(
            "interior data length {} does not match design size {}",
            g.len(),
            design.interior().len()
        )));
    }
    if b.len() != design.boundary().len() {
        return Err(Error::Config(format!(
            "boundary data length {} does not match boundary size {}",
            b.len(),
            design.boundary().len()
        )));
    }
    let mut rows = Vec::with_capacity(g.len() + b.len());
    for p in design.interior() {
        rows.push(Functional { op: operators.interior.clone(), point: *p });
    }
    for p in design.boundary() {
        rows.push(Functional { op: operators.boundary.clone(), point: *p });
    }
    let mut data = DVector::zeros(rows.len());
    data.rows_mut(0, g.len()).copy_from(g);
    data.rows_mut(g.len(), b.len()).copy_from(b);
    assemble_rows(kernel, rows, operators.interior.clone(), data, theta, jitter)
}

/// Condition on an explicit list of functionals. Used directly by the
/// semi-linear machinery, which mixes operator blocks.
pub fn assemble_rows(
    kernel: &KernelSpec,
    rows: Vec<Functional>,
    rep_op: OperatorDescriptor,
    data: DVector<f64>,
    theta: f64,
    jitter: f64,
) -> Result<CollocationPosterior> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Config("cannot condition on an empty design".into()));
    }
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
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
    let weights = factor.chol.solve(&data);
    Ok(CollocationPosterior {
        kernel: kernel.clone(),
        rows,
        rep_op,
        theta,
        gram,
        factor,
        weights,
        data,
    })
}

impl CollocationPosterior {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn num_functionals(&self) -> usize {
        self.rows.len()
    }

    /// Cross-covariance row between the state at `x` and the conditioned
    /// functionals.
    fn cross_row(&self, x: &Point) -> Result<DVector<f64>> {
        let mut c = DVector::zeros(self.rows.len());
        for (j, r) in self.rows.iter().enumerate() {
            c[j] = eval_operator_kernel(
                &self.kernel,
                &OperatorDescriptor::Identity,
                &r.op,
                x,
                &r.point,
                self.theta,
            )?;
        }
        Ok(c)
    }

    fn cross_matrix(&self, xs: &[Point]) -> Result<DMatrix<f64>> {
        let mut c = DMatrix::zeros(xs.len(), self.rows.len());
        for (i, x) in xs.iter().enumerate() {
            let row = self.cross_row(x)?;
            c.row_mut(i).copy_from(&row.transpose());
        }
        Ok(c)
    }

    fn prior_gram(&self, xs: &[Point]) -> Result<DMatrix<f64>> {
        let n = xs.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = eval_operator_kernel(
                    &self.kernel,
                    &OperatorDescriptor::Identity,
                    &OperatorDescriptor::Identity,
                    &xs[i],
                    &xs[j],
                    self.theta,
                )?;
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// Posterior mean `μ(X)`; linear in the conditioned data.
    pub fn posterior_mean(&self, xs: &[Point]) -> Result<DVector<f64>> {
        let c = self.cross_matrix(xs)?;
        Ok(&c * &self.weights)
    }

    /// Posterior covariance `Σ(X)`, symmetric up to round-off.
    pub fn posterior_cov(&self, xs: &[Point]) -> Result<DMatrix<f64>> {
        let c = self.cross_matrix(xs)?;
        let k = self.prior_gram(xs)?;
        let solved = self.factor.chol.solve(&c.transpose());
        Ok(linalg::symmetrize(&(k - &c * solved)))
    }

    /// Pointwise predictive variances `σ²(x)`, clamped to zero inside the
    /// round-off band and rejected below it.
    pub fn posterior_var(&self, xs: &[Point]) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(xs.len());
        for (i, x) in xs.iter().enumerate() {
            let c = self.cross_row(x)?;
            let prior = eval_operator_kernel(
                &self.kernel,
                &OperatorDescriptor::Identity,
                &OperatorDescriptor::Identity,
                x,
                x,
                self.theta,
            )?;
            let v = prior - c.dot(&self.factor.chol.solve(&c));
            if v < -VARIANCE_CLAMP {
                return Err(Error::Numerical(format!(
                    "predictive variance {v:.3e} at {x} is below the clamp band; \
                     kernel derivatives or conditioning are inconsistent"
                )));
            }
            out[i] = v.max(0.0);
        }
        Ok(out)
    }

    /// Draw `count` joint sample paths over `xs`; row `i` is one path.
    /// Deterministic in `seed`.
    pub fn sample_solution(
        &self,
        xs: &[Point],
        seed: u64,
        count: usize,
    ) -> Result<DMatrix<f64>> {
        if count == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        let mean = self.posterior_mean(xs)?;
        let cov = self.posterior_cov(xs)?;
        let factor = linalg::psd_sample_factor(&cov, VARIANCE_CLAMP)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = xs.len();
        let mut out = DMatrix::zeros(count, n);
        for s in 0..count {
            let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let path = &mean + &factor * xi;
            out.row_mut(s).copy_from(&path.transpose());
        }
        Ok(out)
    }

    /// Apply the conditioned functionals to the posterior mean and compare
    /// with the observed data. The conditional mean interpolates, so this is
    /// near zero for well-conditioned assemblies.
    pub fn max_interpolation_residual(&self) -> f64 {
        let reproduced = &self.gram * &self.weights;
        let mut worst: f64 = 0.0;
        for i in 0..self.data.len() {
            let denom = self.data[i].abs().max(1.0);
            worst = worst.max((reproduced[i] - self.data[i]).abs() / denom);
        }
        worst
    }

    /// Re-solve against new observations without refactorising.
    pub fn with_data(&self, data: DVector<f64>) -> Result<CollocationPosterior> {
        if data.len() != self.rows.len() {
            return Err(Error::Config("data length mismatch".into()));
        }
        let weights = self.factor.chol.solve(&data);
        Ok(CollocationPosterior {
            kernel: self.kernel.clone(),
            rows: self.rows.clone(),
            rep_op: self.rep_op.clone(),
            theta: self.theta,
            gram: self.gram.clone(),
            factor: JitteredCholesky {
                chol: self.factor.chol.clone(),
                jitter: self.factor.jitter,
            },
            weights,
            data,
        })
    }
}

/// Grid approximation of the fill distance `sup_x min_j |x - x0_j|`,
/// converging to the true value from below as the grid refines.
pub fn fill_distance(design: &Design, candidate_grid: &[Point]) -> Result<f64> {
    let pts: Vec<&Point> = design.interior().iter().chain(design.boundary().iter()).collect();
    if pts.is_empty() {
        return Err(Error::Domain("fill distance of an empty design".into()));
    }
    let mut h: f64 = 0.0;
    for x in candidate_grid {
        let d = pts.iter().map(|p| p.dist(x)).fold(f64::INFINITY, f64::min);
        h = h.max(d);
    }
    Ok(h)
}

/// Result of the local error-bound diagnostic.
#[derive(Debug, Clone)]
pub struct ErrorBoundReport {
    /// Worst value of `|μ(x) - u0(x)| - σ(x) ||u0||` over the grid; the bound
    /// holds when this is at most round-off.
    pub max_violation: f64,
    pub rkhs_norm: f64,
    pub points_checked: usize,
}

/// Check the worst-case local accuracy bound `|μ(x) - u0(x)| ≤ σ(x)·||u0||`
/// on a test function built in the representer span, where the norm is
/// computable in closed form: `u0 = Σ c_j (A k)(·, q_j)` has
/// `||u0||² = cᵀ [A Ā K(Q)] c`. The posterior is re-conditioned on the data
/// induced by `u0` (same factorisation, new right-hand side).
pub fn local_error_bound_check(
    p: &CollocationPosterior,
    coefficients: &[f64],
    rep_points: &[Point],
    grid: &[Point],
) -> Result<ErrorBoundReport> {
    if coefficients.len() != rep_points.len() {
        return Err(Error::Config("one coefficient per representer point".into()));
    }
    let m = rep_points.len();
    // RKHS norm of the representer combination
    let mut norm2 = 0.0;
    for i in 0..m {
        for j in 0..m {
            norm2 += coefficients[i]
                * coefficients[j]
                * eval_operator_kernel(
                    &p.kernel,
                    &p.rep_op,
                    &p.rep_op,
                    &rep_points[i],
                    &rep_points[j],
                    p.theta,
                )?;
        }
    }
    let norm = norm2.max(0.0).sqrt();

    // data induced by u0 under the posterior's functionals
    let mut data = DVector::zeros(p.rows.len());
    for (i, row) in p.rows.iter().enumerate() {
        let mut v = 0.0;
        for (c, q) in coefficients.iter().zip(rep_points) {
            v += c * eval_operator_kernel(&p.kernel, &row.op, &p.rep_op, &row.point, q, p.theta)?;
        }
        data[i] = v;
    }
    let conditioned = p.with_data(data)?;

    let mu = conditioned.posterior_mean(grid)?;
    let var = conditioned.posterior_var(grid)?;
    let mut max_violation = f64::NEG_INFINITY;
    for (i, x) in grid.iter().enumerate() {
        let mut u0 = 0.0;
        for (c, q) in coefficients.iter().zip(rep_points) {
            u0 += c * eval_operator_kernel(
                &p.kernel,
                &OperatorDescriptor::Identity,
                &p.rep_op,
                x,
                q,
                p.theta,
            )?;
        }
        let lhs = (mu[i] - u0).abs();
        let rhs = var[i].sqrt() * norm;
        max_violation = max_violation.max(lhs - rhs);
    }
    Ok(ErrorBoundReport { max_violation, rkhs_norm: norm, points_checked: grid.len() })
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

/// Pre-assembled kernel blocks for sweeping the posterior over `θ`.
///
/// Operator coefficients are monomials in `θ`, so every Gram / cross / prior
/// entry is a short `θ`-polynomial with kernel-evaluation coefficients. The
/// expensive kernel integrals are computed once; each `θ` then costs one
/// Cholesky of the design-sized matrix.
pub struct ParametricCollocation {
    eval_points: Vec<Point>,
    n_rows: usize,
    gram_blocks: Vec<(i32, DMatrix<f64>)>,
    cross_blocks: Vec<(i32, DMatrix<f64>)>,
    prior_block: (i32, DMatrix<f64>),
}

impl ParametricCollocation {
    pub fn new(
        kernel: &KernelSpec,
        operators: &OperatorSet,
        design: &Design,
        eval_points: &[Point],
    ) -> Result<Self> {
        let mut rows = Vec::new();
        for p in design.interior() {
            rows.push(Functional { op: operators.interior.clone(), point: *p });
        }
        for p in design.boundary() {
            rows.push(Functional { op: operators.boundary.clone(), point: *p });
        }
        let n = rows.len();
        let kpow = kernel.theta_power();
        let terms: Vec<Vec<(f64, i32, crate::kernels::ArgDeriv)>> =
            rows.iter().map(|r| r.op.flatten()).collect();

        let mut gram_blocks: Vec<(i32, DMatrix<f64>)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for (cl, pl, dl) in &terms[i] {
                    for (cr, pr, dr) in &terms[j] {
                        let pow = kpow + pl + pr;
                        let v = cl * cr * kernel.prim(*dl, *dr, &rows[i].point, &rows[j].point)?;
                        upsert(&mut gram_blocks, pow, n, n)[(i, j)] += v;
                    }
                }
            }
        }

        let ne = eval_points.len();
        let mut cross_blocks: Vec<(i32, DMatrix<f64>)> = Vec::new();
        for (i, x) in eval_points.iter().enumerate() {
            for j in 0..n {
                for (cr, pr, dr) in &terms[j] {
                    let pow = kpow + pr;
                    let v =
                        cr * kernel.prim(crate::kernels::ArgDeriv::None, *dr, x, &rows[j].point)?;
                    upsert(&mut cross_blocks, pow, ne, n)[(i, j)] += v;
                }
            }
        }

        let mut prior = DMatrix::zeros(ne, ne);
        for i in 0..ne {
            for j in 0..=i {
                let v = kernel.prim(
                    crate::kernels::ArgDeriv::None,
                    crate::kernels::ArgDeriv::None,
                    &eval_points[i],
                    &eval_points[j],
                )?;
                prior[(i, j)] = v;
                prior[(j, i)] = v;
            }
        }

        Ok(ParametricCollocation {
            eval_points: eval_points.to_vec(),
            n_rows: n,
            gram_blocks,
            cross_blocks,
            prior_block: (kpow, prior),
        })
    }

    pub fn eval_points(&self) -> &[Point] {
        &self.eval_points
    }

    /// Posterior mean and covariance at the evaluation points for one `θ`.
    pub fn posterior_at(
        &self,
        theta: f64,
        data: &DVector<f64>,
        jitter: f64,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if data.len() != self.n_rows {
            return Err(Error::Config("data length mismatch".into()));
        }
        let mut gram = DMatrix::zeros(self.n_rows, self.n_rows);
        for (pow, b) in &self.gram_blocks {
            gram += b * crate::kernels::theta_factor(theta, *pow)?;
        }
        let mut cross = DMatrix::zeros(self.eval_points.len(), self.n_rows);
        for (pow, b) in &self.cross_blocks {
            cross += b * crate::kernels::theta_factor(theta, *pow)?;
        }
        let prior = &self.prior_block.1 * crate::kernels::theta_factor(theta, self.prior_block.0)?;
        let factor = linalg::jittered_cholesky(&gram, jitter)?;
        let weights = factor.chol.solve(data);
        let mean = &cross * weights;
        let solved = factor.chol.solve(&cross.transpose());
        let cov = linalg::symmetrize(&(prior - &cross * solved));
        Ok((mean, cov))
    }
}

fn upsert<'a>(
    blocks: &'a mut Vec<(i32, DMatrix<f64>)>,
    pow: i32,
    r: usize,
    c: usize,
) -> &'a mut DMatrix<f64> {
    if let Some(idx) = blocks.iter().position(|(p, _)| *p == pow) {
        &mut blocks[idx].1
    } else {
        blocks.push((pow, DMatrix::zeros(r, c)));
        &mut blocks.last_mut().unwrap().1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CoefExpr;

    fn poisson_setup(m: usize) -> (KernelSpec, OperatorSet, Design, DVector<f64>) {
        let domain = Domain::unit_interval();
        let kernel = KernelSpec::natural_poisson_1d(2.5).unwrap();
        let ops = OperatorSet::new(
            OperatorDescriptor::theta_laplacian(),
            OperatorDescriptor::BoundaryTrace,
        );
        let design = Design::evenly_spaced(m, &domain).unwrap();
        let g = DVector::from_iterator(
            m,
            design
                .interior()
                .iter()
                .map(|p| -(2.0 * std::f64::consts::PI * p.x()).sin()),
        );
        (kernel, ops, design, g)
    }

    #[test]
    fn zero_data_gives_zero_mean() {
        let (kernel, ops, design, _) = poisson_setup(7);
        let g = DVector::zeros(7);
        let post = assemble(&kernel, &ops, &design, &g, &DVector::zeros(0), 1.0, 0.0).unwrap();
        let xs: Vec<Point> = (1..10).map(|i| Point::one(i as f64 / 10.0)).collect();
        let mu = post.posterior_mean(&xs).unwrap();
        assert!(mu.amax() == 0.0);
        // covariance is prior minus a PSD correction: diagonal at most prior
        let var = post.posterior_var(&xs).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let prior = kernel.eval(x, x).unwrap();
            assert!(var[i] <= prior + 1e-12);
        }
    }

    #[test]
    fn poisson_mean_approximates_exact_solution() {
        let (kernel, ops, design, g) = poisson_setup(39);
        let post = assemble(&kernel, &ops, &design, &g, &DVector::zeros(0), 1.0, 0.0).unwrap();
        let mu = post.posterior_mean(&[Point::one(0.25)]).unwrap();
        let exact = (2.0 * std::f64::consts::PI).powi(-2);
        assert!(
            (mu[0] - exact).abs() < 1e-3,
            "mu(0.25) = {}, exact {exact}",
            mu[0]
        );
    }

    #[test]
    fn doubling_data_doubles_mean() {
        let (kernel, ops, design, g) = poisson_setup(12);
        let post = assemble(&kernel, &ops, &design, &g, &DVector::zeros(0), 1.0, 0.0).unwrap();
        let post2 =
            assemble(&kernel, &ops, &design, &(2.0 * &g), &DVector::zeros(0), 1.0, 0.0).unwrap();
        let xs: Vec<Point> = (1..20).map(|i| Point::one(i as f64 / 20.0)).collect();
        let m1 = post.posterior_mean(&xs).unwrap();
        let m2 = post2.posterior_mean(&xs).unwrap();
        for i in 0..xs.len() {
            assert!((2.0 * m1[i] - m2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_observations() {
        let (kernel, ops, design, g) = poisson_setup(15);
        let post = assemble(&kernel, &ops, &design, &g, &DVector::zeros(0), 1.0, 0.0).unwrap();
        assert!(post.max_interpolation_residual() < 1e-8);
    }

    #[test]
    fn nested_designs_never_increase_variance() {
        let (kernel, ops, _, _) = poisson_setup(1);
        let domain = Domain::unit_interval();
        let small = Design::evenly_spaced(9, &domain).unwrap();
        // refine with the midpoints: a strict superset of information
        let mut pts = small.interior().to_vec();
        for i in 0..=9 {
            pts.push(Point::one(i as f64 / 10.0 + 0.05));
        }
        let big = Design::new(pts.clone(), Vec::new(), &domain).unwrap();
        let gs = DVector::from_iterator(
            9,
            small.interior().iter().map(|p| -(2.0 * std::f64::consts::PI * p.x()).sin()),
        );
        let gb = DVector::from_iterator(
            pts.len(),
            pts.iter().map(|p| -(2.0 * std::f64::consts::PI * p.x()).sin()),
        );
        let ps = assemble(&kernel, &ops, &small, &gs, &DVector::zeros(0), 1.0, 0.0).unwrap();
        let pb = assemble(&kernel, &ops, &big, &gb, &DVector::zeros(0), 1.0, 0.0).unwrap();
        let xs: Vec<Point> = (1..40).map(|i| Point::one(i as f64 / 40.0)).collect();
        let vs = ps.posterior_var(&xs).unwrap();
        let vb = pb.posterior_var(&xs).unwrap();
        for i in 0..xs.len() {
            assert!(vb[i] <= vs[i] + 1e-10, "at {}: {} > {}", xs[i], vb[i], vs[i]);
        }
    }

    #[test]
    fn fill_distance_single_point() {
        let domain = Domain::unit_interval();
        let d = Design::new(vec![Point::one(0.5)], vec![], &domain).unwrap();
        let grid: Vec<Point> = (0..=1000).map(|i| Point::one(i as f64 / 1000.0)).collect();
        let h = fill_distance(&d, &grid).unwrap();
        assert!((h - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fill_distance_superset_never_increases() {
        let domain = Domain::unit_interval();
        let grid: Vec<Point> = (0..=2000).map(|i| Point::one(i as f64 / 2000.0)).collect();
        let d1 = Design::new(vec![Point::one(0.3), Point::one(0.8)], vec![], &domain).unwrap();
        let h1 = fill_distance(&d1, &grid).unwrap();
        let d2 = Design::new(
            vec![Point::one(0.3), Point::one(0.8), Point::one(0.55)],
            vec![],
            &domain,
        )
        .unwrap();
        let h2 = fill_distance(&d2, &grid).unwrap();
        assert!(h2 <= h1);
    }

    #[test]
    fn empty_design_fill_distance_errors() {
        let domain = Domain::unit_interval();
        let d = Design { interior: vec![], boundary: vec![] };
        assert!(fill_distance(&d, &[Point::one(0.5)]).is_err());
        let _ = domain;
    }

    #[test]
    fn duplicate_points_rejected() {
        let domain = Domain::unit_interval();
        let e = Design::new(vec![Point::one(0.4), Point::one(0.4)], vec![], &domain);
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn error_bound_zero_coefficients() {
        let (kernel, ops, design, g) = poisson_setup(8);
        let post = assemble(&kernel, &ops, &design, &g, &DVector::zeros(0), 1.0, 0.0).unwrap();
        let grid: Vec<Point> = (1..30).map(|i| Point::one(i as f64 / 30.0)).collect();
        let rep = [Point::one(0.37)];
        let report = local_error_bound_check(&post, &[0.0], &rep, &grid).unwrap();
        assert!(report.rkhs_norm == 0.0);
        assert!(report.max_violation <= 1e-12);
    }

    #[test]
    fn parametric_assembly_matches_direct_assembly() {
        let domain = Domain::unit_interval();
        let base = KernelSpec::wendland_c2(2.5, domain.clone()).unwrap();
        let kernel = KernelSpec::integral_type(base, 24).unwrap();
        let ops = OperatorSet::new(
            OperatorDescriptor::ScaledLaplacian(CoefExpr::ThetaTimes(1.0)),
            OperatorDescriptor::BoundaryTrace,
        );
        let design = Design::evenly_spaced(6, &domain)
            .unwrap()
            .with_boundary(domain.boundary_points(0), &domain)
            .unwrap();
        let g = DVector::from_iterator(
            6,
            design.interior().iter().map(|p| -(2.0 * std::f64::consts::PI * p.x()).sin()),
        );
        let b = DVector::zeros(2);
        let xs = vec![Point::one(0.25), Point::one(0.75)];
        let para = ParametricCollocation::new(&kernel, &ops, &design, &xs).unwrap();
        let mut data = DVector::zeros(8);
        data.rows_mut(0, 6).copy_from(&g);
        for theta in [0.5, 1.0, 2.3] {
            let (mu_p, cov_p) = para.posterior_at(theta, &data, 0.0).unwrap();
            let direct = assemble(&kernel, &ops, &design, &g, &b, theta, 0.0).unwrap();
            let mu_d = direct.posterior_mean(&xs).unwrap();
            let cov_d = direct.posterior_cov(&xs).unwrap();
            assert!((mu_p - mu_d).amax() < 1e-10);
            assert!((cov_p - cov_d).amax() < 1e-10);
        }
    }
}
