//! Construction and interrogation of normalized test functions and
//! test-object families: bump seeds, biorthogonal dual bases, the moment
//! projections onto higher moment classes, scaling/translation, and the
//! asymptotically-vanishing-moment estimator for families.

use crate::asymptotics::{EpsLadder, SweepResult, SLOPE_TOL};
use crate::error::{Error, Result};
use crate::numerics::{
    default_resolution, fd_derivative, moment, multi_indices, BoundingBox, MultiIndex,
    SampledFunction,
};
use num_complex::Complex64;
use std::sync::Arc;

/// Parameter bundle for mollifier construction.
#[derive(Debug, Clone, Copy)]
pub struct MomentSpec {
    /// Vanishing-moment order.
    pub q: u32,
    /// Support radius.
    pub r: f64,
    /// Space dimension.
    pub s: usize,
}

impl MomentSpec {
    pub fn new(q: u32, r: f64, s: usize) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::usage("MomentSpec requires r > 0"));
        }
        if s == 0 || s > 3 {
            return Err(Error::usage("MomentSpec requires s in {1,2,3}"));
        }
        Ok(Self { q, r, s })
    }
}

/// Normalized smooth bump supported in the centered ball of radius r:
/// c * exp(-1/(1 - |xi/r|^2)) inside, zero outside, with unit integral.
pub fn make_bump(r: f64, s: usize) -> Result<SampledFunction> {
    make_bump_with_resolution(r, s, default_resolution(s))
}

pub fn make_bump_with_resolution(r: f64, s: usize, n: usize) -> Result<SampledFunction> {
    if r <= 0.0 {
        return Err(Error::usage("make_bump requires r > 0"));
    }
    let bbox = BoundingBox::centered(r, s)?;
    let raw = SampledFunction::from_real_fn(bbox, n, move |p| {
        let u2: f64 = p.iter().map(|x| (x / r) * (x / r)).sum();
        if u2 < 1.0 {
            (-1.0 / (1.0 - u2)).exp()
        } else {
            0.0
        }
    })?;
    let mass = raw.integrate();
    Ok(raw.scalar_mul(Complex64::new(1.0, 0.0) / mass))
}

/// Smooth cutoff equal to 1 on `inner`, supported in `outer`.
pub fn make_cutoff(inner: &BoundingBox, outer: &BoundingBox, n: usize) -> Result<SampledFunction> {
    if inner.dim() != outer.dim() {
        return Err(Error::usage("make_cutoff: dimension mismatch"));
    }
    for a in 0..inner.dim() {
        if inner.lo()[a] <= outer.lo()[a] || inner.hi()[a] >= outer.hi()[a] {
            return Err(Error::usage("make_cutoff: inner box must be strictly inside outer"));
        }
    }
    fn edge(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    // smooth transition: 0 for t<=0, 1 for t>=1
    fn ramp(t: f64) -> f64 {
        let a = edge(t);
        let b = edge(1.0 - t);
        a / (a + b)
    }
    let (inner, outer) = (inner.clone(), outer.clone());
    let outer2 = outer.clone();
    SampledFunction::from_real_fn(outer2, n, move |p| {
        let mut v = 1.0;
        for a in 0..inner.dim() {
            let rise = (p[a] - outer.lo()[a]) / (inner.lo()[a] - outer.lo()[a]);
            let fall = (outer.hi()[a] - p[a]) / (outer.hi()[a] - inner.hi()[a]);
            v *= ramp(rise) * ramp(fall);
        }
        v
    })
}

/// Biorthogonal dual system for the monomials of order 1..q: functions
/// phi_1..phi_m with integral zero, supports in the centered ball of radius
/// r, and moment matrix int xi^{beta_i} phi_j = delta_ij.
#[derive(Debug, Clone)]
pub struct DualBasis {
    pub betas: Vec<MultiIndex>,
    pub functions: Vec<SampledFunction>,
    pub gram_residual: f64,
}

/// Residual above which the dual-basis solve is rejected as under-resolved.
pub const GRAM_TOL: f64 = 1e-8;

/// Build the dual basis by solving the Gram system over the ansatz space
/// span{omega, xi^beta * omega} where omega is the normalized bump.
pub fn dual_basis(q: u32, r: f64, s: usize) -> Result<DualBasis> {
    dual_basis_with_resolution(q, r, s, default_resolution(s))
}

pub fn dual_basis_with_resolution(q: u32, r: f64, s: usize, n: usize) -> Result<DualBasis> {
    if q < 1 {
        return Err(Error::usage("dual_basis requires q >= 1"));
    }
    if q > 6 {
        return Err(Error::usage("dual_basis supports q <= 6 (Gram conditioning)"));
    }
    let omega = make_bump_with_resolution(r, s, n)?;
    let betas = multi_indices(s, 1, q);
    let m = betas.len();
    // constraint/ansatz exponents: beta_0 = 0 handles the integral-zero row
    let mut exps = vec![MultiIndex::zero(s)];
    exps.extend(betas.iter().cloned());
    let mut gram = nalgebra::DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..=m {
        for k in 0..=m {
            let (ei, ek) = (exps[i].clone(), exps[k].clone());
            gram[(i, k)] = omega
                .integrate_weighted(|p| ei.monomial(p) * ek.monomial(p))
                .re;
        }
    }
    let lu = gram.lu();
    let mut functions = Vec::with_capacity(m);
    for j in 1..=m {
        let mut rhs = nalgebra::DVector::<f64>::zeros(m + 1);
        rhs[j] = 1.0;
        let coeffs = lu.solve(&rhs).ok_or_else(|| {
            Error::usage("singular Gram matrix in dual basis solve (internal)")
        })?;
        let c: Vec<f64> = coeffs.iter().copied().collect();
        let exps_j = exps.clone();
        let omega_j = omega.clone();
        let f = SampledFunction::from_fn(
            BoundingBox::centered(r, s)?,
            n,
            move |p| {
                let poly: f64 = exps_j
                    .iter()
                    .zip(&c)
                    .map(|(e, &ck)| ck * e.monomial(p))
                    .sum();
                poly * omega_j.eval(p)
            },
        )?;
        functions.push(f);
    }
    // the solve makes the grid moments exact by construction, so the
    // residual is measured on a refined grid where genuine quadrature
    // error shows up
    let mut residual = 0.0f64;
    for (j, f) in functions.iter().enumerate() {
        let fine_src = f.clone();
        let fine = SampledFunction::from_fn(
            BoundingBox::centered(r, s)?,
            2 * n + 1,
            move |p| fine_src.eval(p),
        )?;
        for (i, beta) in betas.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((moment(&fine, beta).re - target).abs());
        }
        residual = residual.max(fine.integrate().norm());
    }
    if residual > GRAM_TOL {
        return Err(Error::resolution(format!(
            "dual basis residual {residual:.3e} exceeds {GRAM_TOL:.0e}; increase resolution"
        )));
    }
    Ok(DualBasis {
        betas,
        functions,
        gram_residual: residual,
    })
}

/// Remove the moments 1..q from a normalized test function:
/// phi - sum_i (int xi^{beta_i} phi) phi_i. Fixes the moment class of order
/// q and is idempotent.
pub fn project_to_aq(phi: &SampledFunction, basis: &DualBasis) -> Result<SampledFunction> {
    let mass = phi.integrate();
    if (mass - Complex64::ONE).norm() > 1e-10 {
        return Err(Error::usage(format!(
            "project_to_aq expects unit mass, got {} (deviation {:.3e})",
            mass,
            (mass - Complex64::ONE).norm()
        )));
    }
    if basis
        .functions
        .first()
        .map(|f| f.dim() != phi.dim())
        .unwrap_or(false)
    {
        return Err(Error::usage("project_to_aq: dimension mismatch"));
    }
    let mut out = phi.clone();
    for (beta, dual) in basis.betas.iter().zip(&basis.functions) {
        let c = moment(phi, beta);
        if c.norm() == 0.0 {
            continue;
        }
        out = out.linear_combination(Complex64::ONE, dual, -c)?;
    }
    Ok(out)
}

/// Mollifier with unit mass and vanishing moments of order 1..q, supported
/// in the centered ball of radius r. q = 0 returns the bump itself.
pub fn make_mollifier(q: u32, r: f64, s: usize) -> Result<SampledFunction> {
    make_mollifier_with_resolution(q, r, s, default_resolution(s))
}

pub fn make_mollifier_with_resolution(
    q: u32,
    r: f64,
    s: usize,
    n: usize,
) -> Result<SampledFunction> {
    let bump = make_bump_with_resolution(r, s, n)?;
    if q == 0 {
        return Ok(bump);
    }
    let basis = dual_basis_with_resolution(q, r, s, n)?;
    project_to_aq(&bump, &basis)
}

/// S_eps phi = eps^{-s} phi(./eps).
pub fn scale(phi: &SampledFunction, eps: f64) -> Result<SampledFunction> {
    phi.scale(eps)
}

/// T_x phi = phi(. - x).
pub fn translate(phi: &SampledFunction, x: &[f64]) -> Result<SampledFunction> {
    phi.translate(x)
}

type FamilyEval = Arc<dyn Fn(f64, &[f64]) -> Result<SampledFunction> + Send + Sync>;
type FamilyDomain = Arc<dyn Fn(f64, &[f64]) -> bool + Send + Sync>;

/// A parameterized map (eps, x) -> test function with a declared validity
/// domain inside (0,1] x Omega, a common support bound, and the moment
/// order the caller claims for it.
#[derive(Clone)]
pub struct TestObjectFamily {
    eval: FamilyEval,
    domain: Option<FamilyDomain>,
    pub bound_box: BoundingBox,
    pub declared_q: u32,
    pub label: String,
}

impl std::fmt::Debug for TestObjectFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestObjectFamily")
            .field("label", &self.label)
            .field("bound_box", &self.bound_box)
            .field("declared_q", &self.declared_q)
            .finish()
    }
}

impl TestObjectFamily {
    pub fn new(
        label: impl Into<String>,
        bound_box: BoundingBox,
        declared_q: u32,
        eval: impl Fn(f64, &[f64]) -> Result<SampledFunction> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            domain: None,
            bound_box,
            declared_q,
            label: label.into(),
        }
    }

    /// Restrict the validity domain by a predicate on (eps, x).
    pub fn with_domain(
        mut self,
        domain: impl Fn(f64, &[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.domain = Some(Arc::new(domain));
        self
    }

    pub fn contains(&self, eps: f64, x: &[f64]) -> bool {
        eps > 0.0 && eps <= 1.0 && self.domain.as_ref().map(|d| d(eps, x)).unwrap_or(true)
    }

    pub fn eval(&self, eps: f64, x: &[f64]) -> Result<SampledFunction> {
        if !self.contains(eps, x) {
            return Err(Error::domain(format!(
                "family '{}' is not defined at (eps = {eps}, x = {x:?})",
                self.label
            )));
        }
        (self.eval)(eps, x)
    }

    /// Constant-in-(eps, x) family at a fixed test function.
    pub fn constant(label: impl Into<String>, phi: SampledFunction, declared_q: u32) -> Self {
        let bound = phi.support();
        Self::new(label, bound, declared_q, move |_, _| Ok(phi.clone()))
    }

    /// phi + c(x) * psi with smooth bounded c.
    pub fn x_modulated(
        label: impl Into<String>,
        phi: SampledFunction,
        psi: SampledFunction,
        c: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        declared_q: u32,
    ) -> Result<Self> {
        let bound = phi.support().hull(&psi.support())?;
        Ok(Self::new(label, bound, declared_q, move |_, x| {
            phi.linear_combination(Complex64::ONE, &psi, Complex64::new(c(x), 0.0))
        }))
    }

    /// phi + eps^k * psi.
    pub fn eps_modulated(
        label: impl Into<String>,
        phi: SampledFunction,
        psi: SampledFunction,
        k: u32,
        declared_q: u32,
    ) -> Result<Self> {
        let bound = phi.support().hull(&psi.support())?;
        Ok(Self::new(label, bound, declared_q, move |eps, _| {
            phi.linear_combination(
                Complex64::ONE,
                &psi,
                Complex64::new(eps.powi(k as i32), 0.0),
            )
        }))
    }
}

/// Report of the asymptotically-vanishing-moment estimate: one sweep per
/// (moment index alpha, x-derivative index beta).
#[derive(Debug, Clone)]
pub struct AvmReport {
    pub q: u32,
    pub sweeps: Vec<AvmSweep>,
    /// True when every fitted slope reaches q - slope_tol (sweeps that
    /// vanish identically pass vacuously).
    pub certified: bool,
}

#[derive(Debug, Clone)]
pub struct AvmSweep {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub result: SweepResult,
    /// All measured values sit at or below the moment tolerance: the
    /// moments vanish outright and the slope test passes vacuously.
    pub vacuous: bool,
}

impl AvmSweep {
    pub fn passes(&self, q: u32) -> bool {
        self.vacuous || self.result.slope >= q as f64 - SLOPE_TOL
    }
}

/// Measure sup_{x in K} |int xi^alpha d_x^beta phi(eps,x)(xi) dxi| over an
/// eps ladder for 1 <= |alpha| <= q and |beta| <= beta_max, and fit the
/// log-log decay order of each. The family is certified of locally
/// asymptotically vanishing moment type of order q when every slope
/// reaches q - slope_tol.
pub fn avm_order_estimate(
    family: &TestObjectFamily,
    k_region: &BoundingBox,
    q: u32,
    beta_max: u32,
    ladder: &EpsLadder,
) -> Result<AvmReport> {
    use crate::asymptotics::MOMENT_TOL;
    let s = k_region.dim();
    let alphas = multi_indices(s, 1, q);
    let betas = multi_indices(s, 0, beta_max);
    let eps_values = ladder.values();
    let nodes = x_grid(k_region, 17);
    // x-derivatives of the moments; the moment map is smooth on the scale
    // of K, so the step follows K rather than eps (a degenerate probe
    // region still gets a positive stencil)
    let h = if k_region.max_side() > 0.0 {
        k_region.max_side() / 16.0
    } else {
        1e-3
    };
    let mut sweeps = Vec::new();
    let mut certified = true;
    for alpha in &alphas {
        for beta in &betas {
            let mut g = Vec::with_capacity(eps_values.len());
            for &eps in &eps_values {
                let mut sup = 0.0f64;
                for x in &nodes {
                    let m = fd_derivative(
                        |y| {
                            let phi = family.eval(eps, y)?;
                            Ok(moment(&phi, alpha))
                        },
                        x,
                        beta,
                        h,
                    )?;
                    sup = sup.max(m.norm());
                }
                // a moment at or below the tolerance counts as vanished;
                // keeping such rungs in the fit would regress against
                // quadrature noise
                sup = if sup <= MOMENT_TOL { 0.0 } else { sup };
                g.push(sup);
            }
            let vacuous = g.iter().all(|&v| v == 0.0);
            let result = SweepResult::new(
                eps_values.clone(),
                g,
                alpha.clone(),
                k_region.clone(),
            );
            let sweep = AvmSweep {
                alpha: alpha.clone(),
                beta: beta.clone(),
                result,
                vacuous,
            };
            certified &= sweep.passes(q);
            sweeps.push(sweep);
        }
    }
    Ok(AvmReport {
        q,
        sweeps,
        certified,
    })
}

/// Uniform probe grid on a region, `per_axis` nodes per axis.
pub fn x_grid(region: &BoundingBox, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = region.dim();
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|a| region.axis_nodes(a, per_axis))
        .collect();
    let mut out = Vec::with_capacity(per_axis.pow(dim as u32));
    let total = per_axis.pow(dim as u32);
    for flat in 0..total {
        let mut rest = flat;
        let mut p = vec![0.0; dim];
        for a in (0..dim).rev() {
            p[a] = axes[a][rest % per_axis];
            rest /= per_axis;
        }
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn bump_is_normalized_and_supported() {
        let b = make_bump(1.0, 1).unwrap();
        assert_relative_eq!(b.integrate().re, 1.0, epsilon = 1e-10);
        assert_eq!(b.eval(&[1.0]).norm(), 0.0);
        assert_eq!(b.eval(&[-1.2]).norm(), 0.0);
        // sup sits at the origin: normalizer / e (grid max, so the peak is
        // resolved only to the node spacing)
        let c = b.eval(&[0.0]).re * std::f64::consts::E;
        assert_relative_eq!(b.sup_norm(), c / std::f64::consts::E, max_relative = 1e-5);
        b.check_compact_support(1e-9).unwrap();
    }

    #[test]
    fn bump_2d_normalized() {
        let b = make_bump_with_resolution(0.7, 2, 128).unwrap();
        assert_relative_eq!(b.integrate().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn dual_basis_q1_matches_direct_solve() {
        // q=1, s=1: the single dual function must satisfy
        // int phi = 0, int xi phi = 1
        let basis = dual_basis(1, 1.0, 1).unwrap();
        assert_eq!(basis.functions.len(), 1);
        let f = &basis.functions[0];
        assert!(f.integrate().norm() < 1e-8);
        assert_relative_eq!(
            moment(f, &MultiIndex(vec![1])).re,
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn dual_basis_biorthogonality_q2() {
        let basis = dual_basis(2, 1.0, 1).unwrap();
        for (i, beta) in basis.betas.iter().enumerate() {
            for (j, f) in basis.functions.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (moment(f, beta).re - target).abs() < 1e-8,
                    "biorthogonality failed at ({i},{j})"
                );
            }
        }
        assert!(basis.gram_residual <= GRAM_TOL);
    }

    #[test]
    fn dual_basis_residual_decreases_with_resolution() {
        // monotone up to the machine floor where the refined-grid probe
        // saturates
        let floor = 1e-13;
        let mut last = f64::INFINITY;
        for n in [512usize, 1024, 2048] {
            let b = dual_basis_with_resolution(2, 1.0, 1, n).unwrap();
            assert!(
                b.gram_residual <= last.max(floor),
                "residual did not decrease at n = {n}: {} after {last}",
                b.gram_residual
            );
            last = b.gram_residual;
        }
    }

    #[test]
    fn dual_basis_supports_inside_radius() {
        let basis = dual_basis(3, 0.8, 1).unwrap();
        for f in &basis.functions {
            let sup = f.support();
            assert!(sup.lo()[0] >= -0.8 - 1e-12 && sup.hi()[0] <= 0.8 + 1e-12);
        }
    }

    #[test]
    fn mollifier_q4_moments_vanish() {
        let m = make_mollifier(4, 1.0, 1).unwrap();
        assert_relative_eq!(m.integrate().re, 1.0, epsilon = 1e-10);
        for a in 1..=4u32 {
            assert!(
                moment(&m, &MultiIndex(vec![a])).norm() <= 1e-8,
                "moment {a} did not vanish"
            );
        }
        assert!(moment(&m, &MultiIndex(vec![3])).norm() <= 1e-8);
    }

    #[test]
    fn mollifier_q0_is_bump() {
        let m = make_mollifier(0, 1.0, 1).unwrap();
        let b = make_bump(1.0, 1).unwrap();
        assert_eq!(m.eval(&[0.3]), b.eval(&[0.3]));
    }

    #[test]
    fn projection_is_idempotent_and_mass_preserving() {
        let basis = dual_basis(3, 1.0, 1).unwrap();
        let bump = make_bump(1.0, 1).unwrap();
        let once = project_to_aq(&bump, &basis).unwrap();
        let twice = project_to_aq(&once, &basis).unwrap();
        assert_relative_eq!(once.integrate().re, 1.0, epsilon = 1e-10);
        for x in [-0.9, -0.3, 0.0, 0.4, 0.8] {
            assert!((once.eval(&[x]) - twice.eval(&[x])).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_fixes_members_of_target_class() {
        let basis = dual_basis(2, 1.0, 1).unwrap();
        let m = make_mollifier(2, 1.0, 1).unwrap();
        let p = project_to_aq(&m, &basis).unwrap();
        for x in [-0.7, 0.1, 0.5] {
            assert!((p.eval(&[x]) - m.eval(&[x])).norm() < 1e-10);
        }
    }

    #[test]
    fn scaling_moment_identity() {
        let m = make_mollifier(2, 1.0, 1).unwrap();
        for k in 1..=10 {
            let eps = 0.5f64.powi(k);
            let scaled = scale(&m, eps).unwrap();
            for a in 0..=4u32 {
                let alpha = MultiIndex(vec![a]);
                let lhs = moment(&scaled, &alpha);
                let rhs = eps.powi(a as i32) * moment(&m, &alpha);
                assert!(
                    (lhs - rhs).norm() <= 1e-10,
                    "scaling identity failed at eps=2^-{k}, alpha={a}"
                );
            }
        }
    }

    #[test]
    fn scale_preserves_integral_and_rescales_sup() {
        let b = make_bump(1.0, 1).unwrap();
        let s = scale(&b, 0.5).unwrap();
        assert!((s.integrate() - b.integrate()).norm() < 1e-12);
        assert_relative_eq!(s.sup_norm(), 2.0 * b.sup_norm(), epsilon = 1e-12);
        assert!(matches!(scale(&b, 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn cutoff_is_one_inside_and_zero_outside() {
        let inner = BoundingBox::interval(-0.5, 0.5).unwrap();
        let outer = BoundingBox::interval(-1.0, 1.0).unwrap();
        let th = make_cutoff(&inner, &outer, 256).unwrap();
        assert_relative_eq!(th.eval(&[0.0]).re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(th.eval(&[0.45]).re, 1.0, epsilon = 1e-14);
        assert_eq!(th.eval(&[1.0]).norm(), 0.0);
        assert!(th.eval(&[0.75]).re > 0.0 && th.eval(&[0.75]).re < 1.0);
    }

    #[test]
    fn constant_family_avm_passes_vacuously() {
        let m = make_mollifier_with_resolution(2, 1.0, 1, 512).unwrap();
        let fam = TestObjectFamily::constant("const", m, 2);
        let k = BoundingBox::interval(-0.5, 0.5).unwrap();
        let ladder = EpsLadder::new(0.5, 0.5, 6).unwrap();
        let report = avm_order_estimate(&fam, &k, 2, 1, &ladder).unwrap();
        assert!(report.certified);
        for sweep in &report.sweeps {
            assert!(sweep.result.g.iter().all(|&v| v <= 1e-8));
        }
    }

    #[test]
    fn eps_modulated_family_recovers_order() {
        // phi(eps,x) = phi_q + eps^q * x * psi, with int xi psi = 1:
        // the first-moment sweep must fit slope q
        let q = 2u32;
        let m = make_mollifier_with_resolution(q, 1.0, 1, 512).unwrap();
        let psi = dual_basis_with_resolution(q, 1.0, 1, 512).unwrap().functions[0].clone();
        let fam = TestObjectFamily::new(
            "eps-mod",
            BoundingBox::centered(1.0, 1).unwrap(),
            q,
            move |eps, x| {
                m.linear_combination(
                    Complex64::ONE,
                    &psi,
                    Complex64::new(eps.powi(q as i32) * x[0], 0.0),
                )
            },
        );
        let k = BoundingBox::interval(0.5, 1.5).unwrap();
        let ladder = EpsLadder::new(0.5, 0.5, 8).unwrap();
        let report = avm_order_estimate(&fam, &k, q, 0, &ladder).unwrap();
        let first = report
            .sweeps
            .iter()
            .find(|s| s.alpha == MultiIndex(vec![1]))
            .unwrap();
        assert!(
            (first.result.slope - q as f64).abs() <= 0.1,
            "slope {} not within 0.1 of {q}",
            first.result.slope
        );
    }

    #[test]
    fn counterexample_family_moment_structure() {
        // phi_q + x psi_q: moments vanish at x = 0 but the x-derivative of
        // the first moment is identically one
        let q = 3u32;
        let m = make_mollifier_with_resolution(q, 1.0, 1, 512).unwrap();
        let psi = dual_basis_with_resolution(q, 1.0, 1, 512).unwrap().functions[0].clone();
        let fam = TestObjectFamily::x_modulated(
            "counterexample",
            m,
            psi,
            |x| x[0],
            q,
        )
        .unwrap();
        let k0 = BoundingBox::point(&[0.0]).unwrap();
        let ladder = EpsLadder::new(0.5, 0.5, 6).unwrap();
        // beta = 0 at K = {0}: all measured moments vanish
        let at_k = avm_order_estimate(&fam, &k0, q, 0, &ladder).unwrap();
        assert!(at_k.certified);
        // beta = 1: the first moment derivative is 1, certification fails
        let with_derivatives = avm_order_estimate(&fam, &k0, q, 1, &ladder).unwrap();
        assert!(!with_derivatives.certified);
        let bad = with_derivatives
            .sweeps
            .iter()
            .find(|s| s.alpha == MultiIndex(vec![1]) && s.beta == MultiIndex(vec![1]))
            .unwrap();
        for &v in &bad.result.g {
            assert_relative_eq!(v, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn family_domain_error_names_offender() {
        let m = make_mollifier_with_resolution(1, 1.0, 1, 512).unwrap();
        let fam = TestObjectFamily::constant("restricted", m, 1)
            .with_domain(|eps, _| eps <= 0.25);
        assert!(fam.eval(0.2, &[0.0]).is_ok());
        let err = fam.eval(0.5, &[0.0]).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("0.5")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn translation_group_law(a in -0.8f64..0.8, b in -0.8f64..0.8) {
            let m = make_bump_with_resolution(1.0, 1, 64).unwrap();
            let lhs = m.translate(&[a]).unwrap().translate(&[b]).unwrap();
            let rhs = m.translate(&[a + b]).unwrap();
            prop_assert_eq!(lhs.support(), rhs.support());
            prop_assert!((lhs.integrate() - rhs.integrate()).norm() == 0.0);
        }

        #[test]
        fn scaled_moment_identity_random(eps in 0.05f64..1.0) {
            let m = make_bump_with_resolution(1.0, 1, 128).unwrap();
            let alpha = MultiIndex(vec![2]);
            let lhs = moment(&m.scale(eps).unwrap(), &alpha);
            let rhs = eps.powi(2) * moment(&m, &alpha);
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }
    }
}
