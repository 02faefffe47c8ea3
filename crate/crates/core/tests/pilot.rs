//! Temporary pilot harness; run with --ignored --nocapture. Deleted once
//! the acceptance thresholds are frozen.

use pmm::experiments::*;
use pmm::inverse::mcmc::ScalarPrior;
use pmm::problems::{parametric_poisson_1d, poisson_1d};

#[test]
#[ignore]
fn pilot_forward_convergence() {
    let problem = poisson_1d();
    let t0 = std::time::Instant::now();
    for kernel in [PoissonKernel::Natural, PoissonKernel::IntegralWendland] {
        let r = forward_convergence(&problem, kernel, &[10, 20, 40, 80], 100, 1.0).unwrap();
        println!("{kernel:?}: l2 = {:?}", r.l2_errors);
        println!("{kernel:?}: s2 = {:?}", r.sigma2_l1);
    }
    println!("elapsed {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn pilot_inverse_sweep_seeds() {
    let problem = parametric_poisson_1d();
    let locs = vec![pmm::Point::one(0.25), pmm::Point::one(0.75)];
    for seed in [1u64, 2, 3, 4, 5, 6, 7, 8] {
        let obs = synthesize_observations(&problem, 1.0, locs.clone(), 1e-3, seed).unwrap();
        let t0 = std::time::Instant::now();
        let req = InverseSweepRequest::default();
        let sweep = inverse_credible_sweep(&problem, &obs, &req).unwrap();
        println!("== seed {seed} (y = {:?}) elapsed {:?}", obs.values.as_slice(), t0.elapsed());
        let mut pmm_sds = vec![];
        let mut plug_sds = vec![];
        for s in &sweep {
            let covers = s.posterior.one_sd_covers(1.0);
            println!(
                "  m={:2} {:6}: mean={:.4} sd={:.4} covers={}",
                s.m,
                s.method.label(),
                s.posterior.mean,
                s.posterior.sd,
                covers
            );
            match s.method {
                LikelihoodMethod::Pmm => pmm_sds.push((s.m, s.posterior.sd, covers)),
                LikelihoodMethod::PlugIn => plug_sds.push((s.m, s.posterior.sd, covers)),
            }
        }
        let ratio = pmm_sds[0].1 / pmm_sds.last().unwrap().1;
        let plug_max = plug_sds.iter().map(|x| x.1).fold(0.0_f64, f64::max);
        let plug_min = plug_sds.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let pmm_cover_10plus = pmm_sds.iter().filter(|x| x.0 >= 10).all(|x| x.2);
        let plug_fail_le20 = plug_sds.iter().any(|x| x.0 <= 20 && !x.2);
        println!(
            "  -> pmm sd5/sd80 = {ratio:.2} ; plug max/min = {:.3} ; pmm covers m>=10: {} ; plugin fails some m<=20: {}",
            plug_max / plug_min,
            pmm_cover_10plus,
            plug_fail_le20
        );
    }
}

#[test]
#[ignore]
fn pilot_natural_vs_integral_posterior_mean() {
    let problem = parametric_poisson_1d();
    let locs = vec![pmm::Point::one(0.25), pmm::Point::one(0.75)];
    let obs = synthesize_observations(&problem, 1.0, locs, 1e-3, 2).unwrap();
    for kernel in [PoissonKernel::Natural, PoissonKernel::IntegralWendland] {
        let req = InverseSweepRequest { kernel, m_values: vec![20], ..Default::default() };
        let sweep = inverse_credible_sweep(&problem, &obs, &req).unwrap();
        for s in &sweep {
            println!(
                "{kernel:?} m=20 {}: mean={:.5} sd={:.5}",
                s.method.label(),
                s.posterior.mean,
                s.posterior.sd
            );
        }
    }
}

#[test]
#[ignore]
fn pilot_design_search() {
    let t0 = std::time::Instant::now();
    let req = DesignRunRequest::default();
    let run = poisson_design_run(&req).unwrap();
    println!("trace: {:?} elapsed {:?}", run.loss_trace, t0.elapsed());
    // random baseline
    let domain = pmm::Domain::unit_interval();
    let problem = pmm::design::DesignProblem {
        loss: pmm::design::DesignLoss::AOptimal,
        kernel: pmm::KernelSpec::natural_poisson_1d(2.5).unwrap(),
        operators: pmm::OperatorSet::new(
            pmm::OperatorDescriptor::theta_laplacian(),
            pmm::OperatorDescriptor::BoundaryTrace,
        ),
        evaluation_points: pmm::design::DesignProblem::default_evaluation_points(&domain),
        domain: domain.clone(),
        jitter: 0.0,
    };
    let t1 = std::time::Instant::now();
    let mut best = f64::INFINITY;
    for s in 0..10_000u64 {
        let d = pmm::collocation::Design::random_interior(5, &domain, 777 + s).unwrap();
        best = best.min(pmm::design::design_loss(&problem, &d, 1.0));
    }
    println!(
        "random best over 1e4: {best:.6e} vs search {:.6e}; random elapsed {:?}",
        run.loss_trace.last().unwrap(),
        t1.elapsed()
    );
}

#[test]
#[ignore]
fn pilot_allen_cahn_short() {
    let mut req = AllenCahnRequest::default();
    req.iters = 1500;
    let t0 = std::time::Instant::now();
    let result = allen_cahn_experiment(&req).unwrap();
    println!("elapsed {:?}", t0.elapsed());
    let (mean, sd) = result.pmm_trace.scalar_moments(300).unwrap();
    let (pmean, psd) = result.plugin_trace.scalar_moments(300).unwrap();
    let mode = result.pmm_trace.scalar_mode(300, 26).unwrap();
    println!(
        "pmm: mean={mean:.4} sd={sd:.4} mode={mode:.4} acc={:.3}; plugin: mean={pmean:.4} sd={psd:.4} acc={:.3}",
        result.pmm_trace.acceptance_rate(),
        result.plugin_trace.acceptance_rate()
    );
    let idx = result.pmm_trace.solution_indices.as_ref().unwrap();
    let mut seen = [0usize; 3];
    for i in idx {
        seen[*i] += 1;
    }
    println!("solution index counts: {seen:?}");
    println!("obs values: {:?}", result.observations.values.as_slice());
}

#[test]
#[ignore]
fn pilot_pseudo_marginal_unbiasedness() {
    // linear latent test problem: A1 = θ∇² − I, A2 = I on the unit interval
    use nalgebra::{DMatrix, DVector};
    use pmm::collocation::Design;
    use pmm::inverse::semilinear::{pseudo_marginal_estimate, LatentImportance};
    use pmm::inverse::{NoiseCov, ObservationSet};
    use pmm::problems::{PointwiseOp, SemiLinearSplit};
    use pmm::selftest::oracles::log_flat_latent_marginal;
    use pmm::{CoefExpr, Domain, KernelSpec, OperatorDescriptor, Point};

    let domain = Domain::unit_interval();
    let kernel =
        KernelSpec::integral_type(KernelSpec::wendland_c2(2.5, domain.clone()).unwrap(), 24)
            .unwrap();
    let split = SemiLinearSplit {
        linear_part: OperatorDescriptor::LinearCombination(vec![
            (CoefExpr::ThetaTimes(1.0), OperatorDescriptor::Laplacian),
            (CoefExpr::Const(-1.0), OperatorDescriptor::Identity),
        ]),
        pointwise: PointwiseOp::Identity,
    };
    let design = Design::new(
        vec![Point::one(0.35), Point::one(0.65)],
        domain.boundary_points(0),
        &domain,
    )
    .unwrap();
    let m = design.interior().len();
    let g = DVector::from_iterator(
        m,
        design
            .interior()
            .iter()
            .map(|p| -(2.0 * std::f64::consts::PI * p.x()).sin()),
    );
    let b = DVector::zeros(2);
    // n = 4 observations >= latent dim 2: proper flat-latent marginal
    let locs = vec![
        Point::one(0.2),
        Point::one(0.4),
        Point::one(0.6),
        Point::one(0.8),
    ];
    let y = DVector::from_vec(vec![0.02, 0.01, -0.01, -0.02]);
    let obs = ObservationSet::new(locs.clone(), y.clone(), NoiseCov::Iso { variance: 1e-4 }, &domain)
        .unwrap();
    let theta = 1.0;

    // oracle pieces: mu_z = W [z; g − z; b] = mu0 + M z
    use pmm::inverse::semilinear::semi_linear_posterior;
    let z0 = DVector::zeros(m);
    let p0 = semi_linear_posterior(
        &kernel,
        &split,
        &OperatorDescriptor::BoundaryTrace,
        &design,
        &g,
        &b,
        &z0,
        theta,
        0.0,
    )
    .unwrap();
    let mu0 = p0.posterior_mean(&locs).unwrap();
    let sigma = p0.posterior_cov(&locs).unwrap();
    let mut mcols = Vec::new();
    for j in 0..m {
        let mut zj = DVector::zeros(m);
        zj[j] = 1.0;
        let pj = semi_linear_posterior(
            &kernel,
            &split,
            &OperatorDescriptor::BoundaryTrace,
            &design,
            &g,
            &b,
            &zj,
            theta,
            0.0,
        )
        .unwrap();
        mcols.push(pj.posterior_mean(&locs).unwrap() - &mu0);
    }
    let mmat = DMatrix::from_columns(&mcols);
    let s = sigma + DMatrix::identity(4, 4) * 1e-4;
    let exact = log_flat_latent_marginal(&y, &mu0, &mmat, &s).unwrap();
    println!("exact log flat marginal = {exact:.6}");

    let center = 0.5 * &g;
    for c in [0.02, 0.05, 0.1] {
        let imp = LatentImportance { center: center.clone(), cov_scale: c };
        // 2000 single-draw estimates
        let mut ests = Vec::new();
        for s_i in 0..2000u64 {
            let e = pseudo_marginal_estimate(
                &kernel, &split, &OperatorDescriptor::BoundaryTrace, &design, &g, &b, &obs,
                theta, &imp, 1, 1000 + s_i, 0.0,
            )
            .unwrap();
            ests.push(e.log_estimate.exp());
        }
        let mean: f64 = ests.iter().sum::<f64>() / ests.len() as f64;
        let var: f64 =
            ests.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (ests.len() - 1) as f64;
        let se = (var / ests.len() as f64).sqrt();
        println!(
            "c={c}: mean(est) = {:.6e}, exact = {:.6e}, |diff|/se = {:.2}",
            mean,
            exact.exp(),
            (mean - exact.exp()).abs() / se
        );
    }
}
