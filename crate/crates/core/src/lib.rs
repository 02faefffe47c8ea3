//! Probabilistic meshless methods for PDEs.
//!
//! A symmetric-collocation solver that returns a full Gaussian conditional
//! measure over the PDE solution instead of a single point estimate. The
//! posterior mean coincides with classical symmetric collocation; the
//! posterior covariance quantifies discretisation error and can be
//! marginalised into the data-likelihood of a Bayesian inverse problem, so
//! that inferences widen honestly when the solver is under-resolved.
//!
//! Crate layout:
//!
//! * [`kernels`] — kernel families, operator-applied kernel evaluation and
//!   the integral-type kernel construction.
//! * [`green1d`] — closed-form solution-space kernel for the 1D Poisson
//!   problem, built from its Green's function.
//! * [`collocation`] — assembly of the Gaussian conditional measure, mean /
//!   covariance / sampling, fill-distance diagnostics.
//! * [`problems`] — built-in PDE problem definitions, including the
//!   steady-state Allen–Cahn equation and its coarse multi-start Newton
//!   solver.
//! * [`inverse`] — marginalised likelihoods, preconditioned Crank–Nicolson
//!   and pseudo-marginal MCMC, kernel calibration.
//! * [`design`] — A-optimal collocation-point placement by coordinate
//!   exchange.
//! * [`selftest`] — oracle suites runnable from the CLI.

pub mod collocation;
pub mod design;
pub mod diagnostics;
pub mod experiments;
pub mod geom;
pub mod green1d;
pub mod inverse;
pub mod kernels;
pub mod linalg;
pub mod opt;
pub mod problems;
pub mod quad;
pub mod selftest;

pub use geom::{Domain, Point};
pub use kernels::{CoefExpr, KernelSpec, OperatorDescriptor, OperatorSet};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported operator: {0}")]
    UnsupportedOperator(String),
    #[error("unsupported prior: {0}")]
    UnsupportedPrior(String),
    #[error("ill-conditioned design: smallest eigenvalue estimate {min_eig:.3e} (size {size})")]
    IllConditioned { min_eig: f64, size: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("solution multiplicity: {0}")]
    Multiplicity(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("latent state rejected by the pointwise inverse")]
    LatentRejection,
}

pub type Result<T> = std::result::Result<T, Error>;
