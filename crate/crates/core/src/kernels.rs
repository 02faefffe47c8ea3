//! Kernel families, operator-applied kernel evaluation and the integral-type
//! kernel construction.
//!
//! Every family provides closed-form derivatives up to order two in each
//! argument, hand-coded rather than autodifferentiated so operator
//! application is exact; finite-difference cross-checks live in the oracle
//! suite. Families that lack the smoothness for a requested derivative
//! report [`Error::UnsupportedOperator`] instead of silently returning junk.

use crate::geom::{Domain, Point};
use crate::green1d;
use crate::quad;
use crate::{Error, Result};

/// Default Gauss–Legendre order for integral-type kernels in one dimension.
pub const DEFAULT_QUAD_ORDER_1D: usize = 40;
/// Default per-axis order of the tensor rule in two dimensions.
pub const DEFAULT_QUAD_ORDER_2D: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `(max(1 - ε|x-x'|, 0))²` — continuous, compact support `1/ε`.
    WendlandC0 { support_scale: f64 },
    /// `(max(1 - ε|x-x'|, 0))⁴ (4ε|x-x'| + 1)` — twice differentiable.
    WendlandC2Class4 { support_scale: f64 },
    /// `exp(-|x-x'|² / 2ℓ²)`.
    SquaredExponential { length_scale: f64 },
    /// Closed-form solution-space kernel of the 1D Poisson problem, see
    /// [`crate::green1d`]. Scales as `θ⁻²` under the parametric operator.
    NaturalPoisson1D { support_scale: f64 },
    /// `k̂(x,x') = ∫_D k̃(x,z) k̃(z,x') dz` over the kernel's domain.
    IntegralType { base: Box<KernelFamily>, quadrature_order: usize },
}

/// A positive-definite kernel over a fixed domain.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub domain: Domain,
}

/// Derivative applied to one argument of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ArgDeriv {
    None,
    Laplacian,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, domain: Domain) -> Result<Self> {
        validate_family(&family, &domain)?;
        Ok(KernelSpec { family, domain })
    }

    pub fn wendland_c0(support_scale: f64, domain: Domain) -> Result<Self> {
        Self::new(KernelFamily::WendlandC0 { support_scale }, domain)
    }

    pub fn wendland_c2(support_scale: f64, domain: Domain) -> Result<Self> {
        Self::new(KernelFamily::WendlandC2Class4 { support_scale }, domain)
    }

    pub fn squared_exponential(length_scale: f64, domain: Domain) -> Result<Self> {
        Self::new(KernelFamily::SquaredExponential { length_scale }, domain)
    }

    pub fn natural_poisson_1d(support_scale: f64) -> Result<Self> {
        Self::new(
            KernelFamily::NaturalPoisson1D { support_scale },
            Domain::unit_interval(),
        )
    }

    /// Integral-type kernel over the base kernel's domain.
    pub fn integral_type(base: KernelSpec, quadrature_order: usize) -> Result<Self> {
        Self::new(
            KernelFamily::IntegralType { base: Box::new(base.family), quadrature_order },
            base.domain,
        )
    }

    /// Power of `θ` the kernel itself carries (`θ⁻²` for the natural family).
    pub fn theta_power(&self) -> i32 {
        match self.family {
            KernelFamily::NaturalPoisson1D { .. } => -2,
            _ => 0,
        }
    }

    /// Plain kernel value `k(x, x')` (at unit parameter).
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        self.prim(ArgDeriv::None, ArgDeriv::None, x, y)
    }

    /// Kernel primitive with a derivative slot per argument, at `θ = 1`.
    pub(crate) fn prim(&self, dl: ArgDeriv, dr: ArgDeriv, x: &Point, y: &Point) -> Result<f64> {
        self.domain.validate_point_dim(x)?;
        self.domain.validate_point_dim(y)?;
        prim_family(&self.family, &self.domain, dl, dr, x, y)
    }
}

fn validate_family(family: &KernelFamily, domain: &Domain) -> Result<()> {
    match family {
        KernelFamily::WendlandC0 { support_scale }
        | KernelFamily::WendlandC2Class4 { support_scale } => {
            if !(*support_scale > 0.0) {
                return Err(Error::Config(format!(
                    "Wendland support scale must be positive, got {support_scale}"
                )));
            }
        }
        KernelFamily::SquaredExponential { length_scale } => {
            if !(*length_scale > 0.0) {
                return Err(Error::Config(format!(
                    "length scale must be positive, got {length_scale}"
                )));
            }
        }
        KernelFamily::NaturalPoisson1D { support_scale } => {
            if !(*support_scale > 0.0) {
                return Err(Error::Config(format!(
                    "support scale must be positive, got {support_scale}"
                )));
            }
            if *domain != Domain::unit_interval() {
                return Err(Error::Config(
                    "the natural Poisson kernel is defined on the unit interval only".into(),
                ));
            }
        }
        KernelFamily::IntegralType { base, quadrature_order } => {
            if *quadrature_order < 2 {
                return Err(Error::Config(format!(
                    "integral-type quadrature order must be at least 2, got {quadrature_order}"
                )));
            }
            match base.as_ref() {
                KernelFamily::IntegralType { .. } => {
                    return Err(Error::Config("nested integral-type kernels are not supported".into()))
                }
                KernelFamily::NaturalPoisson1D { .. } => {
                    return Err(Error::Config(
                        "the natural kernel is a solution-space kernel, not an integral base".into(),
                    ))
                }
                _ => validate_family(base, domain)?,
            }
            if matches!(domain, Domain::UnitDisc) {
                return Err(Error::Config(
                    "integral-type kernels require a box domain for the tensor rule".into(),
                ));
            }
        }
    }
    Ok(())
}

fn prim_family(
    family: &KernelFamily,
    domain: &Domain,
    dl: ArgDeriv,
    dr: ArgDeriv,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    let d = domain.dim();
    match family {
        KernelFamily::WendlandC0 { support_scale } => match (dl, dr) {
            (ArgDeriv::None, ArgDeriv::None) => {
                Ok(green1d::forcing_covariance(x.dist(y), *support_scale))
            }
            _ => Err(Error::UnsupportedOperator(
                "the C0 Wendland kernel is not differentiable at the diagonal".into(),
            )),
        },
        KernelFamily::WendlandC2Class4 { support_scale } => {
            let eps = *support_scale;
            let r = x.dist(y);
            match (dl, dr) {
                (ArgDeriv::None, ArgDeriv::None) => Ok(wendland_c2(eps * r)),
                (ArgDeriv::Laplacian, ArgDeriv::None) | (ArgDeriv::None, ArgDeriv::Laplacian) => {
                    Ok(wendland_c2_laplacian(eps, r, d))
                }
                (ArgDeriv::Laplacian, ArgDeriv::Laplacian) => Err(Error::UnsupportedOperator(
                    "the C2 Wendland kernel supports one Laplacian, not one per argument; use \
                     its integral-type kernel"
                        .into(),
                )),
            }
        }
        KernelFamily::SquaredExponential { length_scale } => {
            Ok(squared_exponential_prim(*length_scale, x, y, d, dl, dr))
        }
        KernelFamily::NaturalPoisson1D { support_scale } => {
            let eps = *support_scale;
            let (a, b) = (x.x(), y.x());
            check_in_unit(a)?;
            check_in_unit(b)?;
            Ok(match (dl, dr) {
                (ArgDeriv::None, ArgDeriv::None) => green1d::natural_kernel_theta1(a, b, eps),
                (ArgDeriv::Laplacian, ArgDeriv::None) => green1d::ak_theta1(a, b, eps),
                (ArgDeriv::None, ArgDeriv::Laplacian) => green1d::ak_theta1(b, a, eps),
                (ArgDeriv::Laplacian, ArgDeriv::Laplacian) => {
                    green1d::forcing_covariance(a - b, eps)
                }
            })
        }
        KernelFamily::IntegralType { base, quadrature_order } => {
            integral_prim(base, domain, *quadrature_order, dl, dr, x, y)
        }
    }
}

fn check_in_unit(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "natural kernel argument {t} lies outside the unit interval"
        )));
    }
    Ok(())
}

/// `φ(r) = (1-r)⁴(4r+1)` on `[0,1]`, zero beyond.
fn wendland_c2(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - r;
    let t2 = t * t;
    t2 * t2 * (4.0 * r + 1.0)
}

/// `φ''(r) = 20 (1-r)² (4r-1)` on `[0,1]`.
fn wendland_c2_d2(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - r;
    20.0 * t * t * (4.0 * r - 1.0)
}

/// `φ'(r) = -20 r (1-r)³`.
fn wendland_c2_d1(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - r;
    -20.0 * r * t * t * t
}

/// Laplacian (in either argument) of `φ(ε‖x-y‖)` in `d` dimensions.
fn wendland_c2_laplacian(eps: f64, r: f64, d: usize) -> f64 {
    let s = eps * r;
    if s >= 1.0 {
        return 0.0;
    }
    if d == 1 {
        return eps * eps * wendland_c2_d2(s);
    }
    if s < 1e-14 {
        // radial limit: φ'(s)/s → φ''(0)
        return eps * eps * d as f64 * wendland_c2_d2(0.0);
    }
    eps * eps * (wendland_c2_d2(s) + (d as f64 - 1.0) * wendland_c2_d1(s) / s)
}

fn squared_exponential_prim(
    ell: f64,
    x: &Point,
    y: &Point,
    d: usize,
    dl: ArgDeriv,
    dr: ArgDeriv,
) -> f64 {
    let r2 = x.dist2(y);
    let l2 = ell * ell;
    let k = (-0.5 * r2 / l2).exp();
    let df = d as f64;
    match (dl, dr) {
        (ArgDeriv::None, ArgDeriv::None) => k,
        // the Laplacian of a radial function of x - x' is the same in either slot
        (ArgDeriv::Laplacian, ArgDeriv::None) | (ArgDeriv::None, ArgDeriv::Laplacian) => {
            (r2 / (l2 * l2) - df / l2) * k
        }
        (ArgDeriv::Laplacian, ArgDeriv::Laplacian) => {
            let l4 = l2 * l2;
            ((df * df + 2.0 * df) / l4 - (2.0 * df + 4.0) * r2 / (l4 * l2) + r2 * r2 / (l4 * l4))
                * k
        }
    }
}

fn integral_prim(
    base: &KernelFamily,
    domain: &Domain,
    order: usize,
    dl: ArgDeriv,
    dr: ArgDeriv,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    // Probe once so an unsupported base derivative errors before quadrature.
    prim_family(base, domain, dl, ArgDeriv::None, x, y)?;
    prim_family(base, domain, dr, ArgDeriv::None, y, x)?;
    let gl = quad::rule(order);
    match domain {
        Domain::Interval { lo, hi } => {
            let mut cuts = base_kink_points(base, x.x());
            cuts.extend(base_kink_points(base, y.x()));
            let f = |z: f64| {
                let pz = Point::one(z);
                let a = prim_family(base, domain, dl, ArgDeriv::None, x, &pz).unwrap_or(0.0);
                let b = prim_family(base, domain, dr, ArgDeriv::None, y, &pz).unwrap_or(0.0);
                a * b
            };
            Ok(quad::integrate_with_breakpoints(&gl, *lo, *hi, &cuts, f))
        }
        Domain::Rect { lo, hi } => {
            // plain tensor rule; adequate for smooth bases
            let mut acc = 0.0;
            for (ni, wi) in gl.nodes.iter().zip(&gl.weights) {
                let zx = 0.5 * (hi[0] - lo[0]) * ni + 0.5 * (hi[0] + lo[0]);
                for (nj, wj) in gl.nodes.iter().zip(&gl.weights) {
                    let zy = 0.5 * (hi[1] - lo[1]) * nj + 0.5 * (hi[1] + lo[1]);
                    let pz = Point::two(zx, zy);
                    let a = prim_family(base, domain, dl, ArgDeriv::None, x, &pz)?;
                    let b = prim_family(base, domain, dr, ArgDeriv::None, y, &pz)?;
                    acc += wi * wj * a * b;
                }
            }
            Ok(acc * 0.25 * (hi[0] - lo[0]) * (hi[1] - lo[1]))
        }
        Domain::UnitDisc => Err(Error::Config(
            "integral-type kernels require a box domain".into(),
        )),
    }
}

/// Abscissae (in 1D) where the base integrand stops being smooth: compact
/// supports contribute their edges and centre.
fn base_kink_points(base: &KernelFamily, c: f64) -> Vec<f64> {
    match base {
        KernelFamily::WendlandC0 { support_scale }
        | KernelFamily::WendlandC2Class4 { support_scale } => {
            let e = 1.0 / support_scale;
            vec![c - e, c, c + e]
        }
        _ => Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Scalar coefficient as a restricted expression in the model parameter:
/// `c`, `θ·c` or `θ⁻¹·c`. This covers every operator used by the built-in
/// problems without an expression language, and keeps the `θ`-dependence of
/// assembled matrices monomial so sweeps over `θ` can reuse kernel blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefExpr {
    Const(f64),
    ThetaTimes(f64),
    ThetaInvTimes(f64),
}

impl CoefExpr {
    pub(crate) fn monomial(&self) -> (f64, i32) {
        match *self {
            CoefExpr::Const(c) => (c, 0),
            CoefExpr::ThetaTimes(c) => (c, 1),
            CoefExpr::ThetaInvTimes(c) => (c, -1),
        }
    }
}

/// Symbolic description of a linear functional-producing operator. The
/// differential order never exceeds two: the Laplacian is the only built-in
/// differential action, matching what the kernel families support in closed
/// form.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorDescriptor {
    Identity,
    Laplacian,
    ScaledLaplacian(CoefExpr),
    LinearCombination(Vec<(CoefExpr, OperatorDescriptor)>),
    /// Point evaluation on the boundary (a Dirichlet trace).
    BoundaryTrace,
}

impl OperatorDescriptor {
    /// `θ ∇²`.
    pub fn theta_laplacian() -> Self {
        OperatorDescriptor::ScaledLaplacian(CoefExpr::ThetaTimes(1.0))
    }

    /// Flatten to monomial terms `(coef, θ-power, derivative)`.
    pub(crate) fn flatten(&self) -> Vec<(f64, i32, ArgDeriv)> {
        match self {
            OperatorDescriptor::Identity | OperatorDescriptor::BoundaryTrace => {
                vec![(1.0, 0, ArgDeriv::None)]
            }
            OperatorDescriptor::Laplacian => vec![(1.0, 0, ArgDeriv::Laplacian)],
            OperatorDescriptor::ScaledLaplacian(e) => {
                let (c, p) = e.monomial();
                vec![(c, p, ArgDeriv::Laplacian)]
            }
            OperatorDescriptor::LinearCombination(parts) => {
                let mut terms = Vec::new();
                for (e, op) in parts {
                    let (c, p) = e.monomial();
                    for (ci, pi, di) in op.flatten() {
                        terms.push((c * ci, p + pi, di));
                    }
                }
                terms
            }
        }
    }
}

/// The operators of a PDE system: the interior operator and the boundary
/// operator (a trace for every built-in problem).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub interior: OperatorDescriptor,
    pub boundary: OperatorDescriptor,
}

impl OperatorSet {
    pub fn new(interior: OperatorDescriptor, boundary: OperatorDescriptor) -> Self {
        OperatorSet { interior, boundary }
    }
}

// ---------------------------------------------------------------------------
// Public evaluation entry points
// ---------------------------------------------------------------------------

/// `k(x, x')`.
pub fn eval_kernel(spec: &KernelSpec, x: &Point, y: &Point) -> Result<f64> {
    spec.eval(x, y)
}

/// `(ℒ ℒ̄' k)(x, x')` with `op_left` acting on the first argument and
/// `op_right` on the second. `θ` feeds both the operator coefficients and
/// the kernel's own parameter power; powers cancel algebraically before any
/// arithmetic, so `θ`-free combinations are exactly `θ`-free.
pub fn eval_operator_kernel(
    spec: &KernelSpec,
    op_left: &OperatorDescriptor,
    op_right: &OperatorDescriptor,
    x: &Point,
    y: &Point,
    theta: f64,
) -> Result<f64> {
    let lterms = op_left.flatten();
    let rterms = op_right.flatten();
    let kpow = spec.theta_power();
    let mut acc = 0.0;
    for (cl, pl, dl) in &lterms {
        for (cr, pr, dr) in &rterms {
            let pow = kpow + pl + pr;
            let tf = theta_factor(theta, pow)?;
            acc += cl * cr * tf * spec.prim(*dl, *dr, x, y)?;
        }
    }
    Ok(acc)
}

pub(crate) fn theta_factor(theta: f64, pow: i32) -> Result<f64> {
    if pow == 0 {
        return Ok(1.0);
    }
    if !(theta > 0.0) {
        return Err(Error::Domain(format!(
            "operator coefficients require a positive parameter, got theta = {theta}"
        )));
    }
    Ok(theta.powi(pow))
}

/// Tensorised Gauss–Legendre approximation of the integral-type kernel
/// `∫_D base(x,z) base(z,x') dz`.
pub fn eval_integral_kernel(
    base: &KernelSpec,
    x: &Point,
    y: &Point,
    quadrature_order: usize,
) -> Result<f64> {
    let spec = KernelSpec::integral_type(base.clone(), quadrature_order)?;
    spec.eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Point {
        Point::one(x)
    }

    #[test]
    fn wendland_c0_values() {
        let k = KernelSpec::wendland_c0(2.5, Domain::unit_interval()).unwrap();
        assert_eq!(k.eval(&p(0.3), &p(0.3)).unwrap(), 1.0);
        assert_eq!(k.eval(&p(0.0), &p(0.5)).unwrap(), 0.0); // outside support 1/eps = 0.4
        assert_eq!(k.eval(&p(0.0), &p(0.2)).unwrap(), 0.25); // (1 - 0.5)^2
    }

    #[test]
    fn identity_pair_equals_plain_evaluation() {
        let k = KernelSpec::wendland_c2(2.5, Domain::unit_interval()).unwrap();
        let a = eval_operator_kernel(
            &k,
            &OperatorDescriptor::Identity,
            &OperatorDescriptor::Identity,
            &p(0.2),
            &p(0.4),
            1.0,
        )
        .unwrap();
        assert_eq!(a, k.eval(&p(0.2), &p(0.4)).unwrap());
    }

    #[test]
    fn scaled_laplacian_pair_on_natural_kernel_gives_forcing_covariance() {
        let k = KernelSpec::natural_poisson_1d(2.5).unwrap();
        let op = OperatorDescriptor::theta_laplacian();
        for theta in [0.7, 1.0, 4.2] {
            let v = eval_operator_kernel(&k, &op, &op, &p(0.1), &p(0.2), theta).unwrap();
            assert_eq!(v, green1d::forcing_covariance(0.1 - 0.2, 2.5));
        }
    }

    #[test]
    fn se_laplacian_at_origin_is_minus_one() {
        let k = KernelSpec::squared_exponential(1.0, Domain::Interval { lo: -5.0, hi: 5.0 })
            .unwrap();
        let v = eval_operator_kernel(
            &k,
            &OperatorDescriptor::Laplacian,
            &OperatorDescriptor::Identity,
            &p(0.0),
            &p(0.0),
            1.0,
        )
        .unwrap();
        assert!((v + 1.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn unsupported_derivatives_error() {
        let c0 = KernelSpec::wendland_c0(2.5, Domain::unit_interval()).unwrap();
        let e = eval_operator_kernel(
            &c0,
            &OperatorDescriptor::Laplacian,
            &OperatorDescriptor::Identity,
            &p(0.3),
            &p(0.4),
            1.0,
        );
        assert!(matches!(e, Err(Error::UnsupportedOperator(_))));

        let c2 = KernelSpec::wendland_c2(2.5, Domain::unit_interval()).unwrap();
        let e = eval_operator_kernel(
            &c2,
            &OperatorDescriptor::Laplacian,
            &OperatorDescriptor::Laplacian,
            &p(0.3),
            &p(0.4),
            1.0,
        );
        assert!(matches!(e, Err(Error::UnsupportedOperator(_))));
    }

    #[test]
    fn integral_kernel_symmetry_is_bitwise() {
        let base = KernelSpec::wendland_c2(2.5, Domain::unit_interval()).unwrap();
        let a = eval_integral_kernel(&base, &p(0.2), &p(0.7), 40).unwrap();
        let b = eval_integral_kernel(&base, &p(0.7), &p(0.2), 40).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0);
    }

    #[test]
    fn integral_kernel_disjoint_supports_vanish() {
        let base = KernelSpec::wendland_c2(10.0, Domain::unit_interval()).unwrap();
        let v = eval_integral_kernel(&base, &p(0.05), &p(0.95), 40).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn quadrature_order_doubling_agrees_on_smooth_base() {
        let base = KernelSpec::squared_exponential(0.4, Domain::unit_interval()).unwrap();
        let a = eval_integral_kernel(&base, &p(0.3), &p(0.6), 20).unwrap();
        let b = eval_integral_kernel(&base, &p(0.3), &p(0.6), 40).unwrap();
        assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
    }

    #[test]
    fn natural_kernel_requires_unit_interval() {
        let bad = KernelSpec::new(
            KernelFamily::NaturalPoisson1D { support_scale: 2.5 },
            Domain::Interval { lo: 0.0, hi: 2.0 },
        );
        assert!(matches!(bad, Err(Error::Config(_))));
    }

    #[test]
    fn theta_powers_cancel_algebraically() {
        // AAbar on the natural kernel is theta-free: bitwise equal across theta
        let k = KernelSpec::natural_poisson_1d(2.5).unwrap();
        let op = OperatorDescriptor::theta_laplacian();
        let a = eval_operator_kernel(&k, &op, &op, &p(0.33), &p(0.45), 0.03).unwrap();
        let b = eval_operator_kernel(&k, &op, &op, &p(0.33), &p(0.45), 17.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn linear_combination_flattening() {
        // -theta lap - theta^{-1} id, as used by the semi-linear split
        let op = OperatorDescriptor::LinearCombination(vec![
            (CoefExpr::ThetaTimes(-1.0), OperatorDescriptor::Laplacian),
            (CoefExpr::ThetaInvTimes(-1.0), OperatorDescriptor::Identity),
        ]);
        let terms = op.flatten();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0], (-1.0, 1, ArgDeriv::Laplacian));
        assert_eq!(terms[1], (-1.0, -1, ArgDeriv::None));
    }

    #[test]
    fn slot_application_commutes() {
        // (L ⊗ I) then (I ⊗ L') equals (I ⊗ L') then (L ⊗ I): both reduce to
        // the same mixed primitive; verified through the public interface by
        // comparing the mixed evaluation against the adjoint evaluation with
        // swapped arguments.
        let k = KernelSpec::squared_exponential(0.7, Domain::unit_interval()).unwrap();
        let lap = OperatorDescriptor::Laplacian;
        let idn = OperatorDescriptor::Identity;
        let mut state = 1234_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let (a, b) = (p(next()), p(next()));
            let lhs = eval_operator_kernel(&k, &lap, &idn, &a, &b, 1.0).unwrap();
            let rhs = eval_operator_kernel(&k, &idn, &lap, &b, &a, 1.0).unwrap();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }
}
