//! Representatives of generalized functions: embeddings of distributions
//! and smooth functions, pointwise ring operations, the two derivative
//! operators, directional differentials in the test-function slot, gluing
//! along a cover, and the association test.

use crate::error::{Error, Result};
use crate::formalism::{in_u_eps, DomainSpec};
use crate::numerics::{fd_derivative, BoundingBox, MultiIndex, SampledFunction};
use crate::testobjects::TestObjectFamily;
use crate::asymptotics::{EpsLadder, SweepResult};
use num_complex::Complex64;
use std::sync::Arc;

/// Which parameterization of the basic space a representative lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formalism {
    /// Evaluation pairs carry the translated test function phi(. - x).
    C,
    /// Evaluation pairs carry the raw test function.
    J,
}

/// Where a representative came from; arithmetic provenance records the
/// operand identities.
#[derive(Debug, Clone)]
pub enum Provenance {
    Embedded(String),
    Smooth,
    Arithmetic(String),
    Glued,
    PulledBack(String),
    Solver(String),
    Custom(String),
}

impl Provenance {
    pub fn arithmetic(label: impl Into<String>) -> Self {
        Provenance::Arithmetic(label.into())
    }

    pub fn label(&self) -> String {
        match self {
            Provenance::Embedded(s) => format!("embedded({s})"),
            Provenance::Smooth => "smooth".into(),
            Provenance::Arithmetic(s) => s.clone(),
            Provenance::Glued => "glued".into(),
            Provenance::PulledBack(s) => format!("pullback({s})"),
            Provenance::Solver(s) => format!("solver({s})"),
            Provenance::Custom(s) => s.clone(),
        }
    }
}

/// Distributions that can be embedded: regular samplers, point masses and
/// their derivatives. Derivative nesting is capped at 4.
#[derive(Clone)]
pub enum Distribution {
    Regular(Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>),
    Delta(Vec<f64>),
    DerivativeOf(Box<Distribution>, MultiIndex),
}

impl std::fmt::Debug for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Distribution::Regular(_) => write!(f, "Regular"),
            Distribution::Delta(a) => write!(f, "Delta({a:?})"),
            Distribution::DerivativeOf(u, alpha) => write!(f, "D^{alpha}{u:?}"),
        }
    }
}

impl Distribution {
    pub fn regular(f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        Distribution::Regular(Arc::new(f))
    }

    pub fn regular_real(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::regular(move |p| Complex64::new(f(p), 0.0))
    }

    pub fn delta_at(location: &[f64]) -> Self {
        Distribution::Delta(location.to_vec())
    }

    pub fn derivative_of(u: Distribution, alpha: MultiIndex) -> Result<Self> {
        let out = Distribution::DerivativeOf(Box::new(u), alpha);
        if out.derivative_depth() > 4 {
            return Err(Error::usage("distribution derivative nesting exceeds 4"));
        }
        Ok(out)
    }

    fn derivative_depth(&self) -> usize {
        match self {
            Distribution::DerivativeOf(u, _) => 1 + u.derivative_depth(),
            _ => 0,
        }
    }

    /// Collapse nested derivatives into (base, total multi-index, sign).
    fn flatten(&self, dim: usize) -> (&Distribution, MultiIndex, f64) {
        match self {
            Distribution::DerivativeOf(u, alpha) => {
                let (base, inner, sign) = u.flatten(dim);
                let total = MultiIndex(
                    inner
                        .0
                        .iter()
                        .zip(&alpha.0)
                        .map(|(a, b)| a + b)
                        .collect(),
                );
                let flips = if alpha.order() % 2 == 1 { -1.0 } else { 1.0 };
                (base, total, sign * flips)
            }
            _ => (self, MultiIndex::zero(dim), 1.0),
        }
    }
}

type RepEval = Arc<dyn Fn(&SampledFunction, &[f64]) -> Result<Complex64> + Send + Sync>;

/// An evaluatable element of the basic space: a map (test function, point)
/// -> complex number, tagged with its parameterization and working domain.
#[derive(Clone)]
pub struct Representative {
    eval: RepEval,
    pub formalism: Formalism,
    pub domain: DomainSpec,
    pub provenance: Provenance,
    embedded: Option<Distribution>,
}

impl std::fmt::Debug for Representative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Representative")
            .field("formalism", &self.formalism)
            .field("domain", &self.domain)
            .field("provenance", &self.provenance.label())
            .finish()
    }
}

fn offset(x: &[f64], w: &[f64]) -> Vec<f64> {
    x.iter().zip(w).map(|(a, b)| a + b).collect()
}

impl Representative {
    pub fn new(
        formalism: Formalism,
        domain: DomainSpec,
        provenance: Provenance,
        eval: impl Fn(&SampledFunction, &[f64]) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        Representative {
            eval: Arc::new(eval),
            formalism,
            domain,
            provenance,
            embedded: None,
        }
    }

    pub fn eval(&self, phi: &SampledFunction, x: &[f64]) -> Result<Complex64> {
        (self.eval)(phi, x)
    }

    /// Scaled insertion used by every asymptotic test: membership of
    /// (phi, x) at scale eps is checked first, then S_eps phi is inserted
    /// (translated by x beforehand in the J parameterization).
    pub fn insert_scaled(
        &self,
        phi: &SampledFunction,
        x: &[f64],
        eps: f64,
    ) -> Result<Complex64> {
        if !in_u_eps(phi, x, &self.domain, eps) {
            return Err(Error::domain(format!(
                "(phi, x = {x:?}) leaves the admissible region at eps = {eps}; \
                 shrink eps0 so the scaled supports stay inside Omega = {}",
                self.domain.omega
            )));
        }
        let scaled = phi.scale(eps)?;
        match self.formalism {
            Formalism::C => self.eval(&scaled, x),
            Formalism::J => self.eval(&scaled.translate(x)?, x),
        }
    }
}

/// Embed a distribution in the C parameterization: pair u with the
/// translated test function. Regular parts integrate in test-function
/// coordinates (nodes follow the support, so accuracy does not collapse
/// under scaling); point masses and derivatives evaluate in closed form.
pub fn embed(u: &Distribution, domain: DomainSpec) -> Result<Representative> {
    if u.derivative_depth() > 4 {
        return Err(Error::usage("distribution derivative nesting exceeds 4"));
    }
    if let Distribution::Delta(a) = u {
        if a.len() != domain.dim() {
            return Err(Error::usage("delta location dimension mismatch"));
        }
    }
    let dist = u.clone();
    let dim = domain.dim();
    let mut rep = Representative::new(
        Formalism::C,
        domain,
        Provenance::Embedded(format!("{u:?}")),
        move |phi, x| eval_embedded(&dist, phi, x, dim),
    );
    rep.embedded = Some(u.clone());
    Ok(rep)
}

fn eval_embedded(
    u: &Distribution,
    phi: &SampledFunction,
    x: &[f64],
    dim: usize,
) -> Result<Complex64> {
    let (base, alpha, sign) = u.flatten(dim);
    let out = match base {
        Distribution::Regular(f) => {
            let f = f.clone();
            if alpha.order() == 0 {
                phi.integrate_weighted_complex(|w| f(&offset(x, w)))
            } else {
                let dphi = phi.derivative(&alpha)?;
                dphi.integrate_weighted_complex(|w| f(&offset(x, w)))
            }
        }
        Distribution::Delta(a) => {
            let p: Vec<f64> = a.iter().zip(x).map(|(ai, xi)| ai - xi).collect();
            if alpha.order() == 0 {
                phi.eval(&p)
            } else {
                let h = phi.support().max_side() / 256.0;
                fd_derivative(|q| Ok(phi.eval(q)), &p, &alpha, h)?
            }
        }
        Distribution::DerivativeOf(..) => unreachable!("flattened"),
    };
    let out = sign * out;
    if !out.re.is_finite() || !out.im.is_finite() {
        return Err(Error::evaluation(format!(
            "embedded distribution produced a non-finite value at x = {x:?}"
        )));
    }
    Ok(out)
}

/// Embed a smooth function pointwise: the evaluation ignores the test
/// function entirely.
pub fn embed_smooth(
    f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    domain: DomainSpec,
) -> Representative {
    Representative::new(Formalism::C, domain, Provenance::Smooth, move |_, x| {
        Ok(f(x))
    })
}

pub fn embed_smooth_real(
    f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    domain: DomainSpec,
) -> Representative {
    embed_smooth(move |x| Complex64::new(f(x), 0.0), domain)
}

/// The discrepancy between the convolution embedding and the pointwise one
/// for a smooth f, evaluated in fused form
/// int phi(w) (f(x + w) - f(x)) dw.
///
/// This is the cancellation-safe evaluation of the difference: subtracting
/// the two embeddings after quadrature would lose the decay below the
/// quadrature noise floor once the values reach machine scale.
pub fn embedding_defect(
    f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    domain: DomainSpec,
) -> Representative {
    Representative::new(
        Formalism::C,
        domain,
        Provenance::arithmetic("iota(f) - sigma(f)"),
        move |phi, x| {
            let fx = f(x);
            Ok(phi.integrate_weighted_complex(|w| f(&offset(x, w)) - fx))
        },
    )
}

/// Pointwise ring operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Mul,
}

pub fn combine(op: BinaryOp, r1: &Representative, r2: &Representative) -> Result<Representative> {
    if r1.formalism != r2.formalism {
        return Err(Error::usage("combine: operands use different formalisms"));
    }
    if r1.domain.omega != r2.domain.omega {
        return Err(Error::usage("combine: operands live on different domains"));
    }
    let (a, b) = (r1.clone(), r2.clone());
    let label = format!(
        "{}({}, {})",
        match op {
            BinaryOp::Add => "add",
            BinaryOp::Mul => "mul",
        },
        r1.provenance.label(),
        r2.provenance.label()
    );
    Ok(Representative::new(
        r1.formalism,
        r1.domain.clone(),
        Provenance::arithmetic(label),
        move |phi, x| {
            let u = a.eval(phi, x)?;
            let v = b.eval(phi, x)?;
            Ok(match op {
                BinaryOp::Add => u + v,
                BinaryOp::Mul => u * v,
            })
        },
    ))
}

pub fn scalar_mul(c: Complex64, r: &Representative) -> Representative {
    let inner = r.clone();
    Representative::new(
        r.formalism,
        r.domain.clone(),
        Provenance::arithmetic(format!("scalar({c}, {})", r.provenance.label())),
        move |phi, x| Ok(c * inner.eval(phi, x)?),
    )
}

pub fn sub(r1: &Representative, r2: &Representative) -> Result<Representative> {
    combine(BinaryOp::Add, r1, &scalar_mul(-Complex64::ONE, r2))
}

/// Derivative in the C parameterization: the partial derivative in the
/// point slot along the curve t -> (phi, x + t e_i). Embedded
/// distributions commute the derivative onto the distribution and evaluate
/// in closed form; everything else falls back to scale-aware finite
/// differences.
pub fn derive_c(r: &Representative, axis: usize) -> Result<Representative> {
    if r.formalism != Formalism::C {
        return Err(Error::usage("derive_c expects a C-formalism representative"));
    }
    let dim = r.domain.dim();
    if axis >= dim {
        return Err(Error::usage("derive_c: axis out of range"));
    }
    if let Some(u) = &r.embedded {
        if u.derivative_depth() < 4 {
            let du = Distribution::derivative_of(u.clone(), MultiIndex::unit(dim, axis))?;
            return embed(&du, r.domain.clone());
        }
    }
    let inner = r.clone();
    Ok(Representative::new(
        Formalism::C,
        r.domain.clone(),
        Provenance::arithmetic(format!("d_{axis}({})", r.provenance.label())),
        move |phi, x| {
            let h = phi.support().max_side().min(0.16) / 16.0;
            fd_derivative(
                |y| inner.eval(phi, y),
                x,
                &MultiIndex::unit(x.len(), axis),
                h,
            )
        },
    ))
}

/// Derivative in the J parameterization: the two-term formula
/// -(d_1 R)(phi, x)[d_i phi] + (d_i R)(phi, x).
pub fn derive_j(r: &Representative, axis: usize) -> Result<Representative> {
    if r.formalism != Formalism::J {
        return Err(Error::usage("derive_j expects a J-formalism representative"));
    }
    let dim = r.domain.dim();
    if axis >= dim {
        return Err(Error::usage("derive_j: axis out of range"));
    }
    let inner = r.clone();
    Ok(Representative::new(
        Formalism::J,
        r.domain.clone(),
        Provenance::arithmetic(format!("dj_{axis}({})", r.provenance.label())),
        move |phi, x| {
            let dphi = phi.derivative(&MultiIndex::unit(phi.dim(), axis))?;
            let first = d1_directional(&inner, phi, x, &[dphi], D1_STEP)?;
            let h = phi.support().max_side().min(0.16) / 16.0;
            let second = fd_derivative(
                |y| inner.eval(phi, y),
                x,
                &MultiIndex::unit(x.len(), axis),
                h,
            )?;
            Ok(-first + second)
        },
    ))
}

/// Default relative step for directional differentials in the
/// test-function slot.
pub const D1_STEP: f64 = 1e-3;

/// Iterated directional differential of R in the test-function slot along
/// the directions psi_1, ..., psi_k (each with integral zero). Central
/// differences with one Richardson halving; the step is h_rel relative to
/// the sup norms involved.
pub fn d1_directional(
    r: &Representative,
    phi: &SampledFunction,
    x: &[f64],
    directions: &[SampledFunction],
    h_rel: f64,
) -> Result<Complex64> {
    for psi in directions {
        let vol: f64 = (0..psi.dim()).map(|a| psi.support().side(a)).product();
        let scale = 1.0 + psi.sup_norm() * vol;
        if psi.integrate().norm() > 1e-8 * scale {
            return Err(Error::usage(format!(
                "d1 direction has non-vanishing integral {:.3e}",
                psi.integrate().norm()
            )));
        }
    }
    fn recurse(
        r: &Representative,
        phi: &SampledFunction,
        x: &[f64],
        dirs: &[SampledFunction],
        h_rel: f64,
    ) -> Result<Complex64> {
        let Some((psi, rest)) = dirs.split_last() else {
            return r.eval(phi, x);
        };
        let sup = psi.sup_norm();
        if sup == 0.0 {
            return Ok(Complex64::ZERO);
        }
        let t = h_rel * (1.0 + phi.sup_norm()) / sup;
        let shifted = |tt: f64| -> Result<Complex64> {
            let p = phi.linear_combination(Complex64::ONE, psi, Complex64::new(tt, 0.0))?;
            if !in_u_eps(&p, x, &r.domain, 1.0) {
                return Err(Error::domain(format!(
                    "perturbed test function leaves the admissible region at x = {x:?}"
                )));
            }
            recurse(r, &p, x, rest, h_rel)
        };
        let coarse = (shifted(t)? - shifted(-t)?) / (2.0 * t);
        let fine = (shifted(0.5 * t)? - shifted(-0.5 * t)?) / t;
        Ok((4.0 * fine - coarse) / 3.0)
    }
    recurse(r, phi, x, directions, h_rel)
}

/// One chart of a glued representative.
#[derive(Clone)]
pub struct GlueChart {
    /// Chart domain Omega_j.
    pub chart_domain: BoundingBox,
    /// Cutoff equal to 1 near the support of the weight.
    pub theta: SampledFunction,
    /// Region where theta is identically 1 (enables the exact identity
    /// short cut for pairs already supported inside the chart).
    pub theta_one_box: Option<BoundingBox>,
    /// Unit-mass corrector supported in the chart.
    pub corrector: SampledFunction,
    /// Partition-of-unity weight subordinate to the chart.
    pub weight: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

/// Glue chart-local representatives into one on the union of the charts.
///
/// Each chart contributes weight(x) * R_j(pi_j(phi, x)) where pi_j rewrites
/// the test function as theta(. + x) phi - (int theta(xi) phi(xi - x) dxi - 1)
/// corrector(. + x); pairs whose support already sits where theta is 1 pass
/// through unchanged.
pub fn glue(charts: &[GlueChart], reps: &[Representative]) -> Result<Representative> {
    if charts.is_empty() || charts.len() != reps.len() {
        return Err(Error::usage("glue requires one representative per chart"));
    }
    if reps.iter().any(|r| r.formalism != Formalism::C) {
        return Err(Error::usage("glue operates on C-formalism representatives"));
    }
    let mut union = charts[0].chart_domain.clone();
    for c in &charts[1..] {
        union = union.hull(&c.chart_domain)?;
    }
    for c in charts {
        let mass = c.corrector.integrate();
        if (mass - Complex64::ONE).norm() > 1e-8 {
            return Err(Error::usage(format!(
                "glue corrector must have unit mass, got {mass}"
            )));
        }
    }
    // partition-of-unity sanity on a probe grid over the union
    for x in crate::testobjects::x_grid(&union, 33) {
        if charts.iter().any(|c| c.chart_domain.contains(&x)) {
            let total: f64 = charts.iter().map(|c| (c.weight)(&x)).sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::usage(format!(
                    "chart weights sum to {total} at x = {x:?}; not a partition of unity"
                )));
            }
        }
    }
    let charts = charts.to_vec();
    let reps = reps.to_vec();
    let domain = DomainSpec::new(union);
    Ok(Representative::new(
        Formalism::C,
        domain,
        Provenance::Glued,
        move |phi, x| {
            let mut acc = Complex64::ZERO;
            for (chart, rep) in charts.iter().zip(&reps) {
                let w = (chart.weight)(x);
                if w == 0.0 {
                    continue;
                }
                let supp_shifted = phi.support().translated(x);
                let passthrough = chart
                    .theta_one_box
                    .as_ref()
                    .map(|b| supp_shifted.scaled_shifted_inside(1.0, &vec![0.0; x.len()], b, 0.0))
                    .unwrap_or(false);
                let value = if passthrough {
                    rep.eval(phi, x)?
                } else {
                    let theta = chart.theta.clone();
                    let coeff = phi
                        .integrate_weighted_complex(|wn| theta.eval(&offset(wn, x)))
                        - Complex64::ONE;
                    let corrector = chart.corrector.clone();
                    let corr_box = corrector
                        .support()
                        .translated(&x.iter().map(|v| -v).collect::<Vec<_>>());
                    let bbox = phi.support().hull(&corr_box)?;
                    let phi_in = phi.clone();
                    let xx = x.to_vec();
                    let inner = SampledFunction::from_fn(bbox, phi.resolution(), move |xi| {
                        let shifted = offset(xi, &xx);
                        theta.eval(&shifted) * phi_in.eval(xi) - coeff * corrector.eval(&shifted)
                    })?;
                    rep.eval(&inner, x)?
                };
                acc += w * value;
            }
            Ok(acc)
        },
    ))
}

/// Association probe: the smeared difference
/// int (R1 - R2)(S_eps phi(eps,x), x) psi(x) dx over the ladder.
#[derive(Debug, Clone)]
pub struct AssociationReport {
    pub sweep: SweepResult,
    pub associated: bool,
}

/// Tolerance on the smallest-rung value for the associated verdict.
pub const ASSOCIATION_FLOOR: f64 = 1e-9;

pub fn association_test(
    r1: &Representative,
    r2: &Representative,
    weight: &SampledFunction,
    family: &TestObjectFamily,
    ladder: &EpsLadder,
) -> Result<AssociationReport> {
    let region = weight.support();
    let dim = region.dim();
    let nodes = 65usize;
    let axis_weights: Vec<Vec<f64>> = (0..dim)
        .map(|a| crate::numerics::simpson_weights(nodes, region.side(a) / (nodes - 1) as f64))
        .collect();
    let grid = crate::testobjects::x_grid(&region, nodes);
    let eps_values = ladder.values();
    let mut values = Vec::with_capacity(eps_values.len());
    for &eps in &eps_values {
        let mut acc = Complex64::ZERO;
        for (i, x) in grid.iter().enumerate() {
            let mut w = 1.0;
            let mut rest = i;
            for a in (0..dim).rev() {
                w *= axis_weights[a][rest % nodes];
                rest /= nodes;
            }
            let psi_x = weight.eval(x);
            if psi_x.norm() == 0.0 {
                continue;
            }
            let phi = family.eval(eps, x)?;
            let diff = r1.insert_scaled(&phi, x, eps)? - r2.insert_scaled(&phi, x, eps)?;
            acc += w * psi_x * diff;
        }
        values.push(acc.norm());
    }
    let sweep = SweepResult::new(
        eps_values,
        values,
        MultiIndex::zero(dim),
        region,
    );
    let associated = sweep.slope > 0.0 || sweep.g.last().map(|&v| v <= ASSOCIATION_FLOOR).unwrap_or(false);
    Ok(AssociationReport { sweep, associated })
}
