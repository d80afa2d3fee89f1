//! Diffeomorphism actions: transporting test-object families, pulling back
//! representatives, and the moment-degradation check for transformed
//! families.
//!
//! Maps are supplied in closed form (forward, inverse, Jacobian
//! determinant of the inverse); the constructor cross-checks them on a
//! deterministic point battery so slope measurements are not contaminated
//! by inversion error.

use crate::asymptotics::EpsLadder;
use crate::error::{Error, Result};
use crate::formalism::{in_u_eps, DomainSpec};
use crate::numerics::{fd_derivative, BoundingBox, MultiIndex, SampledFunction};
use crate::algebra::{Formalism, Provenance, Representative};
use crate::testobjects::{avm_order_estimate, make_mollifier_with_resolution, AvmReport, TestObjectFamily};
use num_complex::Complex64;
use std::sync::Arc;

type Map = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A diffeomorphism from a source box onto a target region, with closed
/// form inverse and inverse-Jacobian determinant.
#[derive(Clone)]
pub struct Diffeomorphism {
    forward: Map,
    inverse: Map,
    jac_det_inv: ScalarMap,
    /// Domain of the forward map.
    pub source: BoundingBox,
    /// Image region (box hull) of the forward map.
    pub target: BoundingBox,
    pub label: String,
    is_identity: bool,
}

impl std::fmt::Debug for Diffeomorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diffeomorphism")
            .field("label", &self.label)
            .field("source", &self.source)
            .field("target", &self.target)
            .finish()
    }
}

/// Deterministic low-discrepancy battery of points in the interior of a
/// box (golden-ratio lattice, inset from the boundary).
pub fn point_battery(region: &BoundingBox, count: usize) -> Vec<Vec<f64>> {
    const IRRATIONALS: [f64; 3] = [0.618033988749895, 0.414213562373095, 0.732050807568877];
    (0..count)
        .map(|k| {
            (0..region.dim())
                .map(|a| {
                    let frac = ((k + 1) as f64 * IRRATIONALS[a]).fract();
                    let inset = 0.05 * region.side(a);
                    region.lo()[a] + inset + frac * (region.side(a) - 2.0 * inset)
                })
                .collect()
        })
        .collect()
}

impl Diffeomorphism {
    /// Build and cross-check a diffeomorphism. The battery verifies
    /// forward/inverse consistency to 1e-10, positivity of the Jacobian
    /// factor, and (in one dimension) agreement of the supplied Jacobian
    /// with a finite-difference derivative of the inverse to 1e-6.
    pub fn new(
        label: impl Into<String>,
        source: BoundingBox,
        target: BoundingBox,
        forward: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        inverse: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jac_det_inv: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let out = Diffeomorphism {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            jac_det_inv: Arc::new(jac_det_inv),
            source,
            target,
            label: label.into(),
            is_identity: false,
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        for y in point_battery(&self.target, 100) {
            let x = self.inv(&y);
            let back = self.fwd(&x);
            let err: f64 = y
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err > 1e-10 {
                return Err(Error::usage(format!(
                    "forward(inverse(y)) deviates by {err:.3e} at y = {y:?} for '{}'",
                    self.label
                )));
            }
            let j = (self.jac_det_inv)(&y);
            if !(j > 0.0) || !j.is_finite() {
                return Err(Error::usage(format!(
                    "inverse Jacobian determinant must be positive, got {j} at y = {y:?}"
                )));
            }
            if self.source.dim() == 1 {
                let h = 1e-4 * self.target.side(0);
                let fd = fd_derivative(
                    |p| Ok(Complex64::new(self.inv(p)[0], 0.0)),
                    &y,
                    &MultiIndex(vec![1]),
                    h,
                )?
                .re;
                if (fd.abs() - j).abs() > 1e-6 * (1.0 + j.abs()) {
                    return Err(Error::usage(format!(
                        "Jacobian mismatch at y = {y:?}: supplied {j}, fd {fd}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn fwd(&self, x: &[f64]) -> Vec<f64> {
        (self.forward)(x)
    }

    pub fn inv(&self, y: &[f64]) -> Vec<f64> {
        (self.inverse)(y)
    }

    pub fn jac_det_inv_at(&self, y: &[f64]) -> f64 {
        (self.jac_det_inv)(y)
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity
    }

    pub fn identity(region: BoundingBox) -> Self {
        Diffeomorphism {
            forward: Arc::new(|x: &[f64]| x.to_vec()),
            inverse: Arc::new(|y: &[f64]| y.to_vec()),
            jac_det_inv: Arc::new(|_| 1.0),
            source: region.clone(),
            target: region,
            label: "identity".into(),
            is_identity: true,
        }
    }

    /// One-dimensional affine map x -> a x + b (a != 0).
    pub fn affine_1d(a: f64, b: f64, source: BoundingBox) -> Result<Self> {
        if a == 0.0 || source.dim() != 1 {
            return Err(Error::usage("affine_1d requires a != 0 and a 1D source"));
        }
        let (lo, hi) = (a * source.lo()[0] + b, a * source.hi()[0] + b);
        let target = BoundingBox::interval(lo.min(hi), lo.max(hi))?;
        Diffeomorphism::new(
            format!("affine({a},{b})"),
            source,
            target,
            move |x| vec![a * x[0] + b],
            move |y| vec![(y[0] - b) / a],
            move |_| (1.0 / a).abs(),
        )
    }

    /// One-dimensional cubic perturbation x -> x + c x^3 (c > 0), inverted
    /// in closed form through the real Cardano root.
    pub fn cubic_1d(c: f64, source: BoundingBox) -> Result<Self> {
        if !(c > 0.0) || source.dim() != 1 {
            return Err(Error::usage("cubic_1d requires c > 0 and a 1D source"));
        }
        let fwd = move |x: f64| x + c * x * x * x;
        let inv = move |y: f64| {
            // x^3 + x/c - y/c = 0: unique real root, discriminant positive
            let p = 1.0 / c;
            let q = -y / c;
            let disc = (0.25 * q * q + p * p * p / 27.0).sqrt();
            (-0.5 * q + disc).cbrt() + (-0.5 * q - disc).cbrt()
        };
        let target = BoundingBox::interval(fwd(source.lo()[0]), fwd(source.hi()[0]))?;
        Diffeomorphism::new(
            format!("cubic({c})"),
            source,
            target,
            move |x| vec![fwd(x[0])],
            move |y| vec![inv(y[0])],
            move |y| {
                let x = inv(y[0]);
                1.0 / (1.0 + 3.0 * c * x * x)
            },
        )
    }

    /// The essentially-flat-at-zero map x -> (x/3) exp(-3/x) on a positive
    /// interval. Its inverse has no elementary closed form; it is computed
    /// by a bracketed Newton iteration converging to machine precision
    /// (used for value fixtures, not slope measurements).
    pub fn flat_exponential_1d(source: BoundingBox) -> Result<Self> {
        if source.dim() != 1 || source.lo()[0] <= 0.0 {
            return Err(Error::usage(
                "flat_exponential_1d requires a 1D source with positive lower bound",
            ));
        }
        let fwd = |x: f64| x / 3.0 * (-3.0 / x).exp();
        let dfwd = |x: f64| (-3.0 / x).exp() * (1.0 / 3.0 + 1.0 / x);
        let (a, b) = (source.lo()[0], source.hi()[0]);
        let inv = move |y: f64| -> f64 {
            // bracketed Newton on the monotone forward map
            let (mut lo, mut hi) = (a, b);
            let mut x = 0.5 * (lo + hi);
            for _ in 0..200 {
                let f = fwd(x) - y;
                if f > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                let d = dfwd(x);
                let mut next = x - f / d;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - x).abs() <= 1e-16 * x.abs() {
                    return next;
                }
                x = next;
            }
            x
        };
        let target = BoundingBox::interval(fwd(a), fwd(b))?;
        Diffeomorphism::new(
            "flat-exponential",
            source,
            target,
            move |x| vec![fwd(x[0])],
            move |y| vec![inv(y[0])],
            move |y| 1.0 / dfwd(inv(y[0])),
        )
    }

    /// Composition self o other (apply `other` first).
    pub fn compose(&self, other: &Diffeomorphism) -> Result<Diffeomorphism> {
        if self.source.dim() != other.target.dim() {
            return Err(Error::usage("compose: dimension mismatch"));
        }
        let f1 = self.forward.clone();
        let f2 = other.forward.clone();
        let i1 = self.inverse.clone();
        let i2 = other.inverse.clone();
        let j1 = self.jac_det_inv.clone();
        let j2 = other.jac_det_inv.clone();
        let i1b = self.inverse.clone();
        Diffeomorphism::new(
            format!("{} . {}", self.label, other.label),
            other.source.clone(),
            self.target.clone(),
            move |x| f1(&f2(x)),
            move |y| i2(&i1(y)),
            move |y| j1(y) * j2(&i1b(y)),
        )
    }

    /// Local Lipschitz bound around a point: sampled over the
    /// neighborhood of radius `radius` clipped to the source box. A tight
    /// bound keeps the support boxes of transported test functions (and
    /// with them the effective quadrature resolution) from inflating.
    pub fn local_lipschitz(&self, center: &[f64], radius: f64) -> f64 {
        let dim = self.source.dim();
        let lo: Vec<f64> = (0..dim)
            .map(|a| (center[a] - radius).max(self.source.lo()[a]))
            .collect();
        let hi: Vec<f64> = (0..dim)
            .map(|a| (center[a] + radius).min(self.source.hi()[a]))
            .collect();
        match BoundingBox::new(lo, hi) {
            Ok(b) if b.has_volume() => self.lipschitz_bound(&b),
            _ => self.lipschitz_bound(&self.source),
        }
    }

    /// Sampled bound on the forward Lipschitz constant over a region
    /// (sup of the induced infinity norm of the Jacobian, with headroom).
    pub fn lipschitz_bound(&self, region: &BoundingBox) -> f64 {
        let dim = region.dim();
        let mut best = 1.0f64;
        for x in point_battery(region, 64) {
            let mut row_sums = vec![0.0f64; dim];
            for j in 0..dim {
                let h = 1e-5 * region.side(j).max(1e-3);
                let mut xp = x.clone();
                xp[j] += h;
                let mut xm = x.clone();
                xm[j] -= h;
                let (fp, fm) = (self.fwd(&xp), self.fwd(&xm));
                for i in 0..dim {
                    row_sums[i] += ((fp[i] - fm[i]) / (2.0 * h)).abs();
                }
            }
            best = best.max(row_sums.iter().fold(0.0, |m, &v| f64::max(m, v)));
        }
        1.05 * best
    }
}

/// Transport a test-object family from the source of mu to its target:
/// the transported function at (eps, x) is
///   xi -> phi~(eps, mu^{-1} x)((mu^{-1}(eps xi + x) - mu^{-1} x) / eps)
///         * |det D mu^{-1}(eps xi + x)|,
/// extended by zero outside the image support, on the partial domain of
/// (eps, x) where the source pair is admissible at scale eps.
pub fn transform_family(
    mu: &Diffeomorphism,
    family: &TestObjectFamily,
) -> Result<TestObjectFamily> {
    if mu.is_identity {
        return Ok(family.clone());
    }
    let rho = family
        .bound_box
        .lo()
        .iter()
        .chain(family.bound_box.hi())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let lip = mu.lipschitz_bound(&mu.source);
    let s = mu.source.dim();
    // common support bound for the whole family (global Lipschitz)
    let bound = BoundingBox::centered(lip * rho, s)?;
    let source_domain = DomainSpec::new(mu.source.clone());
    let fam = family.clone();
    let mu1 = mu.clone();
    let mu2 = mu.clone();
    let fam2 = family.clone();
    let source_domain2 = source_domain.clone();
    let out = TestObjectFamily::new(
        format!("{}*{}", mu.label, family.label),
        bound,
        family.declared_q,
        move |eps, x| {
            let xt = mu1.inv(x);
            let phit = fam.eval(eps, &xt)?;
            if !in_u_eps(&phit, &xt, &source_domain, eps) {
                return Err(Error::domain(format!(
                    "transported family undefined at (eps = {eps}, x = {x:?}): \
                     source pair leaves the admissible region"
                )));
            }
            // per-evaluation support box from the local Lipschitz constant
            let lip_loc = mu1.local_lipschitz(&xt, rho);
            let local_bound = BoundingBox::centered(lip_loc * rho, s)?;
            let target = mu1.target.clone();
            let mu_in = mu1.clone();
            let xv = x.to_vec();
            let n = phit.resolution();
            SampledFunction::from_fn(local_bound, n, move |xi| {
                let y: Vec<f64> = xi.iter().zip(&xv).map(|(u, v)| eps * u + v).collect();
                if !target.contains(&y) {
                    return Complex64::ZERO;
                }
                let w: Vec<f64> = mu_in
                    .inv(&y)
                    .iter()
                    .zip(&xt)
                    .map(|(u, v)| (u - v) / eps)
                    .collect();
                phit.eval(&w) * mu_in.jac_det_inv_at(&y)
            })
        },
    );
    Ok(out.with_domain(move |eps, x| {
        if !mu2.target.contains(x) {
            return false;
        }
        let xt = mu2.inv(x);
        match fam2.eval(eps, &xt) {
            Ok(phit) => in_u_eps(&phit, &xt, &source_domain2, eps),
            Err(_) => false,
        }
    }))
}

/// Pull a representative on the target of mu back to its source:
/// (pullback R)(phi~, x~) = R(mu_bar(phi~, x~)) where mu_bar transports the
/// pair through the translation chart.
pub fn pullback_representative(
    mu: &Diffeomorphism,
    rep: &Representative,
) -> Result<Representative> {
    if rep.formalism != Formalism::C {
        return Err(Error::usage(
            "pullback operates on C-formalism representatives; translate first",
        ));
    }
    if mu.is_identity {
        let mut out = rep.clone();
        out.provenance = Provenance::PulledBack(format!("identity:{}", rep.provenance.label()));
        return Ok(out);
    }
    let inner = rep.clone();
    let mu = mu.clone();
    let source_domain = DomainSpec::new(mu.source.clone());
    Ok(Representative::new(
        Formalism::C,
        source_domain,
        Provenance::PulledBack(format!("{}:{}", mu.label, rep.provenance.label())),
        move |phi_t, x_t| {
            let x = mu.fwd(x_t);
            let rho = phi_t
                .support()
                .lo()
                .iter()
                .chain(phi_t.support().hi())
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            let lip = mu.local_lipschitz(x_t, rho);
            let bound = BoundingBox::centered((lip * rho).max(1e-12), phi_t.dim())?;
            let target = mu.target.clone();
            let mu_in = mu.clone();
            let xv = x.clone();
            let xt = x_t.to_vec();
            let phi_src = phi_t.clone();
            let psi = SampledFunction::from_fn(bound, phi_t.resolution(), move |xi| {
                let y: Vec<f64> = xi.iter().zip(&xv).map(|(u, v)| u + v).collect();
                if !target.contains(&y) {
                    return Complex64::ZERO;
                }
                let w: Vec<f64> = mu_in
                    .inv(&y)
                    .iter()
                    .zip(&xt)
                    .map(|(u, v)| u - v)
                    .collect();
                phi_src.eval(&w) * mu_in.jac_det_inv_at(&y)
            })?;
            if !in_u_eps(&psi, &x, &inner.domain, 1.0) {
                return Err(Error::domain(format!(
                    "pulled-back pair leaves the admissible region at x~ = {x_t:?}"
                )));
            }
            inner.eval(&psi, &x)
        },
    ))
}

/// Run the moment-degradation check: transport a constant family at a
/// mollifier of order q and measure the decay order of its moments over
/// the image region; the transported family must keep asymptotically
/// vanishing moments of order floor((q+1)/2).
pub fn moment_degradation_check(
    mu: &Diffeomorphism,
    q: u32,
    k_tilde: &BoundingBox,
    radius: f64,
    resolution: usize,
    ladder: &EpsLadder,
) -> Result<AvmReport> {
    let s = mu.source.dim();
    let phi = make_mollifier_with_resolution(q, radius, s, resolution)?;
    let fam = TestObjectFamily::constant(format!("const-q{q}"), phi, q);
    let transported = transform_family(mu, &fam)?;
    let l_region = image_box(mu, k_tilde);
    let degraded_order = (q + 1) / 2;
    avm_order_estimate(&transported, &l_region, degraded_order, 1, ladder)
}

/// Bounding box of the image of a region under the forward map (corner and
/// midpoint samples; exact for monotone 1D maps).
pub fn image_box(mu: &Diffeomorphism, region: &BoundingBox) -> BoundingBox {
    let dim = region.dim();
    let mut pts = point_battery(region, 32);
    // include the corners
    for corner in 0..(1usize << dim) {
        let p: Vec<f64> = (0..dim)
            .map(|a| {
                if corner >> a & 1 == 1 {
                    region.hi()[a]
                } else {
                    region.lo()[a]
                }
            })
            .collect();
        pts.push(p);
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in pts {
        let y = mu.fwd(&p);
        for a in 0..dim {
            lo[a] = lo[a].min(y[a]);
            hi[a] = hi[a].max(y[a]);
        }
    }
    BoundingBox::new(lo, hi).expect("image box is non-degenerate")
}
