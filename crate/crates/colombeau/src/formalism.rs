//! Admissibility domains for (test function, point) pairs and the exact
//! translation between the two parameterizations of the basic space.
//!
//! A pair (phi, x) is admissible at scale eps when the scaled support
//! eps * supp(phi) + x stays inside Omega; with eps = 1 this is membership
//! in the unscaled pair domain. Representatives come in two equivalent
//! parameterizations related by the translation chart (phi, x) ->
//! (phi(. - x), x); the two directions compose exactly, so round trips are
//! bit-identical.

use crate::algebra::{Formalism, Provenance, Representative};
use crate::error::{Error, Result};
use crate::numerics::{BoundingBox, SampledFunction};
use std::sync::Arc;

/// Open working domain Omega with a numerical boundary clearance.
///
/// Omega is a box, optionally sharpened by a predicate for non-box domains;
/// the predicate is checked on the corner points of candidate supports.
#[derive(Clone)]
pub struct DomainSpec {
    pub omega: BoundingBox,
    pub margin: f64,
    predicate: Option<Arc<dyn Fn(&[f64]) -> bool + Send + Sync>>,
}

impl std::fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainSpec")
            .field("omega", &self.omega)
            .field("margin", &self.margin)
            .field("predicate", &self.predicate.is_some())
            .finish()
    }
}

impl DomainSpec {
    /// Default margin: 1e-9 * diameter, a strict-inequality proxy.
    pub fn new(omega: BoundingBox) -> Self {
        assert!(
            omega.has_volume(),
            "working domain must have positive extent"
        );
        let margin = 1e-9 * omega.max_side();
        DomainSpec {
            omega,
            margin,
            predicate: None,
        }
    }

    pub fn with_margin(omega: BoundingBox, margin: f64) -> Result<Self> {
        let smallest = (0..omega.dim())
            .map(|a| omega.side(a))
            .fold(f64::INFINITY, f64::min);
        if !(margin >= 0.0 && margin < 0.5 * smallest) {
            return Err(Error::usage(
                "margin must be non-negative and below half the smallest side",
            ));
        }
        Ok(DomainSpec {
            omega,
            margin,
            predicate: None,
        })
    }

    /// Sharpen the box by a pointwise membership predicate.
    pub fn with_predicate(
        mut self,
        predicate: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.predicate = Some(Arc::new(predicate));
        self
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }
}

/// Membership of (phi, x) in the scaled pair domain: interval-arithmetic
/// check that eps * supp(phi) + x lies in Omega with the configured
/// clearance. eps = 1 recovers the unscaled pair domain.
pub fn in_u_eps(phi: &SampledFunction, x: &[f64], domain: &DomainSpec, eps: f64) -> bool {
    if !(eps > 0.0 && eps <= 1.0) || x.len() != domain.dim() || phi.dim() != domain.dim() {
        return false;
    }
    let sup = phi.support();
    if !sup.scaled_shifted_inside(eps, x, &domain.omega, domain.margin) {
        return false;
    }
    if let Some(pred) = &domain.predicate {
        // check the corners of the scaled, shifted support box
        let dim = domain.dim();
        for corner in 0..(1usize << dim) {
            let p: Vec<f64> = (0..dim)
                .map(|a| {
                    let v = if corner >> a & 1 == 1 {
                        sup.hi()[a]
                    } else {
                        sup.lo()[a]
                    };
                    eps * v + x[a]
                })
                .collect();
            if !pred(&p) {
                return false;
            }
        }
    }
    true
}

/// Translate a J-parameterized representative into the C parameterization:
/// the C evaluation at (phi, x) is the J evaluation at (phi(. - x), x).
pub fn to_c(rep: &Representative) -> Result<Representative> {
    if rep.formalism != Formalism::J {
        return Err(Error::usage("to_c expects a J-formalism representative"));
    }
    let inner = rep.clone();
    Ok(Representative::new(
        Formalism::C,
        rep.domain.clone(),
        Provenance::arithmetic(format!("to_c({})", rep.provenance.label())),
        move |phi, x| {
            let shifted = phi.translate(x)?;
            inner.eval(&shifted, x)
        },
    ))
}

/// Translate a C-parameterized representative into the J parameterization.
pub fn to_j(rep: &Representative) -> Result<Representative> {
    if rep.formalism != Formalism::C {
        return Err(Error::usage("to_j expects a C-formalism representative"));
    }
    let inner = rep.clone();
    Ok(Representative::new(
        Formalism::J,
        rep.domain.clone(),
        Provenance::arithmetic(format!("to_j({})", rep.provenance.label())),
        move |phi, x| {
            let minus: Vec<f64> = x.iter().map(|v| -v).collect();
            let shifted = phi.translate(&minus)?;
            inner.eval(&shifted, x)
        },
    ))
}
