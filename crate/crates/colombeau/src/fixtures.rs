//! Worked counterexamples as executable checks with closed-form expected
//! values: the first-moment functional whose derivative sweep produces
//! exactly eps, the squared-identity product defect producing 2 eps^2, the
//! unbounded transport of a shrinking test-function sequence under an
//! essentially flat map, and the lower bound for a boundary-hugging
//! pairing integral.

use crate::algebra::{Formalism, Provenance, Representative};
use crate::asymptotics::EpsLadder;
use crate::diffeo::Diffeomorphism;
use crate::error::{Error, Result};
use crate::formalism::DomainSpec;
use crate::numerics::{fd_derivative, moment, simpson_weights, BoundingBox, CompensatedSum, MultiIndex, SampledFunction};
use crate::testobjects::{dual_basis_with_resolution, make_bump_with_resolution, make_mollifier_with_resolution, TestObjectFamily};
use num_complex::Complex64;

/// Outcome of one fixture: measured values against closed-form targets.
#[derive(Debug, Clone)]
pub struct FixtureReport {
    pub name: String,
    /// (input label, measured value) pairs.
    pub measured: Vec<(String, f64)>,
    pub expected: Vec<f64>,
    pub max_rel_err: f64,
    pub pass: bool,
    /// Relative tolerance defining `pass`.
    pub tolerance: f64,
}

impl FixtureReport {
    fn from_pairs(
        name: impl Into<String>,
        measured: Vec<(String, f64)>,
        expected: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        let max_rel_err = measured
            .iter()
            .zip(&expected)
            .map(|((_, m), &e)| (m - e).abs() / e.abs().max(1e-300))
            .fold(0.0f64, f64::max);
        FixtureReport {
            name: name.into(),
            measured,
            expected,
            max_rel_err,
            pass: max_rel_err <= tolerance,
            tolerance,
        }
    }

    /// CSV rows: name, input, measured, expected, rel_err.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,input,measured,expected,rel_err\n");
        for ((label, m), e) in self.measured.iter().zip(&self.expected) {
            let rel = (m - e).abs() / e.abs().max(1e-300);
            out.push_str(&format!("{},{label},{m},{e},{rel}\n", self.name));
        }
        out
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{},{},max_rel_err={:.3e},tol={:.0e}",
            self.name,
            if self.pass { "pass" } else { "FAIL" },
            self.max_rel_err,
            self.tolerance
        )
    }
}

/// The first-moment functional R(phi, x) = int xi phi(xi) dxi as a
/// representative (the negligible object whose derivative test on the
/// x-modulated family is exactly eps).
pub fn first_moment_representative(domain: DomainSpec) -> Representative {
    Representative::new(
        Formalism::C,
        domain,
        Provenance::Custom("first-moment".into()),
        |phi, _| Ok(moment(phi, &MultiIndex(vec![1]))),
    )
}

/// The x-modulated counterexample family phi_q + x psi_q where psi_q has
/// integral zero and first moment one.
pub fn counterexample_family(q: u32, resolution: usize) -> Result<TestObjectFamily> {
    let phi_q = make_mollifier_with_resolution(q, 1.0, 1, resolution)?;
    let psi_q = dual_basis_with_resolution(q.max(2), 1.0, 1, resolution)?.functions[0].clone();
    TestObjectFamily::x_modulated(format!("phi{q}+x.psi{q}"), phi_q, psi_q, |x| x[0], q)
}

/// Derivative sweep of the first-moment functional on the counterexample
/// family at x = 0: the measured value is exactly eps at every rung (the
/// first moment of the scaled insertion is eps * x, so its x-derivative is
/// eps, which never reaches second order no matter how large q is).
pub fn fixture_first_moment_derivative(ladder: &EpsLadder) -> Result<FixtureReport> {
    let q = 2;
    let resolution = 1024;
    let domain = DomainSpec::new(BoundingBox::interval(-2.0, 2.0).unwrap());
    let rep = first_moment_representative(domain);
    let fam = counterexample_family(q, resolution)?;
    let mut measured = Vec::new();
    let mut expected = Vec::new();
    for eps in ladder.values() {
        let h = eps / 16.0;
        let v = fd_derivative(
            |x| rep.insert_scaled(&fam.eval(eps, x)?, x, eps),
            &[0.0],
            &MultiIndex(vec![1]),
            h,
        )?;
        measured.push((format!("eps={eps}"), v.re));
        expected.push(eps);
    }
    Ok(FixtureReport::from_pairs(
        "first-moment-derivative",
        measured,
        expected,
        1e-6,
    ))
}

/// Second-derivative sweep of the squared-identity product defect
/// iota(id) * iota(id) - iota(id^2) at x = 0 on the counterexample family
/// (with psi_q additionally free of second moments): the value is exactly
/// 2 eps^2.
pub fn fixture_product_defect_derivative(ladder: &EpsLadder) -> Result<FixtureReport> {
    let resolution = 1024;
    let domain = DomainSpec::new(BoundingBox::interval(-2.0, 2.0).unwrap());
    // phi_q in the moment class of order max(2, q); psi_q with first moment
    // one and vanishing second moment (both supplied by the dual basis)
    let fam = counterexample_family(2, resolution)?;
    let id = crate::algebra::Distribution::regular(|p| Complex64::new(p[0], 0.0));
    let id2 = crate::algebra::Distribution::regular(|p| Complex64::new(p[0] * p[0], 0.0));
    let iota_id = crate::algebra::embed(&id, domain.clone())?;
    let iota_id2 = crate::algebra::embed(&id2, domain)?;
    let prod = crate::algebra::combine(crate::algebra::BinaryOp::Mul, &iota_id, &iota_id)?;
    let defect = crate::algebra::sub(&prod, &iota_id2)?;
    let mut measured = Vec::new();
    let mut expected = Vec::new();
    for eps in ladder.values() {
        let h = eps / 16.0;
        let v = fd_derivative(
            |x| defect.insert_scaled(&fam.eval(eps, x)?, x, eps),
            &[0.0],
            &MultiIndex(vec![2]),
            h,
        )?;
        measured.push((format!("eps={eps}"), v.re));
        expected.push(2.0 * eps * eps);
    }
    Ok(FixtureReport::from_pairs(
        "product-defect-second-derivative",
        measured,
        expected,
        1e-3,
    ))
}

/// The boundary-layer seed function: supported in [0, 2], equal to
/// exp(-1/x) on (0, 1], integral zero.
pub fn boundary_rho() -> Result<SampledFunction> {
    // rho_1: exp(-1/x) on (0,1], smoothly cut off inside [1, 3/2]
    fn edge(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    fn ramp(t: f64) -> f64 {
        let a = edge(t);
        let b = edge(1.0 - t);
        a / (a + b)
    }
    let rho1 = move |x: f64| -> f64 {
        if x <= 0.0 || x >= 1.5 {
            0.0
        } else {
            (-1.0 / x).exp() * ramp((1.5 - x) / 0.5)
        }
    };
    // c = int rho_1, then subtract c * rho_2 with rho_2 a unit-mass bump
    // supported in [3/2, 2]
    let c = {
        let n = 16385;
        let w = simpson_weights(n, 1.6 / (n - 1) as f64);
        let mut acc = CompensatedSum::default();
        for (i, wi) in w.iter().enumerate() {
            acc.add(wi * rho1(i as f64 * 1.6 / (n - 1) as f64));
        }
        acc.value()
    };
    let rho2 = make_bump_with_resolution(0.25, 1, 2048)?.translate(&[1.75])?;
    SampledFunction::from_real_fn(BoundingBox::interval(0.0, 2.0).unwrap(), 2048, move |p| {
        rho1(p[0]) - c * rho2.eval(&[p[0]]).re
    })
}

/// Transport of the shrinking sequence (1/n) rho(. - 1/n) under the
/// essentially flat map x -> (x/3) exp(-3/x): evaluating at the image of
/// 2/n gives (1/n) e^{n/2} 6/(2+3n), which grows without bound.
pub fn fixture_flat_map_unboundedness(n_list: &[u32]) -> Result<FixtureReport> {
    let usable: Vec<u32> = n_list
        .iter()
        .copied()
        .filter(|&n| (3..=40).contains(&n))
        .collect();
    if usable.is_empty() {
        return Err(Error::usage(
            "fixture_flat_map_unboundedness needs entries with 3 <= n <= 40 (overflow guard)",
        ));
    }
    let rho = boundary_rho()?;
    let psi = make_bump_with_resolution(0.3, 1, 2048)?.translate(&[0.5])?;
    let mu = Diffeomorphism::flat_exponential_1d(BoundingBox::interval(0.02, 1.0).unwrap())?;
    let mut measured = Vec::new();
    let mut expected = Vec::new();
    for &n in &usable {
        let nf = n as f64;
        // phi_n = (1/n) rho(. - 1/n) + psi; the transported difference
        // phi_n - psi is evaluated at mu(2/n)
        let shifted = rho.translate(&[1.0 / nf])?.scalar_mul(Complex64::new(1.0 / nf, 0.0));
        let phi_n = shifted.add(&psi)?;
        let diff = phi_n.linear_combination(Complex64::ONE, &psi, -Complex64::ONE)?;
        let y = mu.fwd(&[2.0 / nf]);
        let value = diff.eval(&mu.inv(&y)).re * mu.jac_det_inv_at(&y);
        let closed_form = (1.0 / nf) * (nf / 2.0).exp() * 6.0 / (2.0 + 3.0 * nf);
        measured.push((format!("n={n}"), value));
        expected.push(closed_form);
    }
    let mut report = FixtureReport::from_pairs("flat-map-unboundedness", measured, expected, 1e-4);
    // the sequence must grow strictly
    let growing = report
        .measured
        .windows(2)
        .all(|w| w[1].1 > w[0].1);
    report.pass = report.pass && growing;
    Ok(report)
}

/// Lower bound for the pairing integral int_0^1 f(x) rho(x - t^2) dx with
/// f(x) = x^{-2} exp(1/x + 2/x^2) on (0,1): the value dominates
/// exp(1/t^2 - 1) - e.
pub fn fixture_pairing_lower_bound(t_list: &[f64]) -> Result<FixtureReport> {
    for &t in t_list {
        let t2 = t * t;
        if !(t.abs() > 0.0 && t.abs() <= 1.0 / 2f64.sqrt()) {
            return Err(Error::usage(format!(
                "fixture_pairing_lower_bound requires 0 < |t| <= 1/sqrt(2), got {t}"
            )));
        }
        if t2 < 0.15 {
            return Err(Error::usage(format!(
                "fixture_pairing_lower_bound requires t^2 >= 0.15 (integrand magnitude guard), got t = {t}"
            )));
        }
    }
    let f = |x: f64| -> f64 {
        if x > 0.0 && x < 1.0 {
            (1.0 / (x * x)) * (1.0 / x + 2.0 / (x * x)).exp()
        } else {
            0.0
        }
    };
    let mut measured = Vec::new();
    let mut expected = Vec::new();
    for &t in t_list {
        let t2 = t * t;
        // rho equals exp(-1/w) on the whole overlap (x - t^2 stays in (0,1])
        let quad = |n: usize| -> f64 {
            let w = simpson_weights(n, (1.0 - t2) / (n - 1) as f64);
            let mut acc = CompensatedSum::default();
            for (i, wi) in w.iter().enumerate() {
                let x = t2 + i as f64 * (1.0 - t2) / (n - 1) as f64;
                // close the integral at x = 1 with the interior branch
                let fx = if i == n - 1 { f(1.0 - 1e-12) } else { f(x) };
                let wv = x - t2;
                acc.add(wi * fx * if wv > 0.0 { (-1.0 / wv).exp() } else { 0.0 });
            }
            acc.value()
        };
        let mut n = 4097usize;
        let mut value = quad(n);
        loop {
            let next = quad(2 * n - 1);
            let change = (next - value).abs() / next.abs().max(1e-300);
            value = next;
            n = 2 * n - 1;
            if change <= 1e-3 {
                break;
            }
            if n > 1 << 22 {
                return Err(Error::resolution(format!(
                    "pairing integral did not settle at t = {t} (relative change {change:.3e})"
                )));
            }
        }
        let bound = (1.0 / t2 - 1.0).exp() - std::f64::consts::E;
        measured.push((format!("t={t}"), value));
        expected.push(bound);
    }
    // bound-type fixture: rel_err measures how far a value fell below its
    // bound; any value at or above the bound contributes zero
    let max_rel_err = measured
        .iter()
        .zip(&expected)
        .map(|((_, m), &e)| ((e - m) / e.abs().max(1e-300)).max(0.0))
        .fold(0.0f64, f64::max);
    let increasing = measured.windows(2).all(|w| w[1].1 > w[0].1)
        && expected.windows(2).all(|w| w[1] > w[0]);
    Ok(FixtureReport {
        name: "boundary-pairing-lower-bound".into(),
        measured,
        expected,
        max_rel_err,
        pass: max_rel_err == 0.0 && increasing,
        tolerance: 0.0,
    })
}

/// Ladder used by the derivative counterexample fixtures.
pub fn default_fixture_ladder() -> EpsLadder {
    EpsLadder::new(0.5, 0.5, 7).expect("static ladder is valid")
}

/// Run the whole fixture battery with default parameters.
pub fn run_all_fixtures() -> Result<Vec<FixtureReport>> {
    Ok(vec![
        fixture_first_moment_derivative(&default_fixture_ladder())?,
        fixture_product_defect_derivative(&default_fixture_ladder())?,
        fixture_flat_map_unboundedness(&[4, 6, 8, 10, 12, 14, 16, 18, 20])?,
        fixture_pairing_lower_bound(&[0.7, 0.6, 0.5])?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_derivative_fixture_values_are_eps() {
        let report = fixture_first_moment_derivative(&default_fixture_ladder()).unwrap();
        assert!(report.pass, "{}", report.summary_line());
        for ((label, m), e) in report.measured.iter().zip(&report.expected) {
            assert!(
                (m - e).abs() <= 1e-6,
                "{label}: measured {m}, expected {e}"
            );
        }
        // two spot values against the closed form
        let at_quarter = report
            .measured
            .iter()
            .find(|(l, _)| l == "eps=0.25")
            .unwrap()
            .1;
        assert_relative_eq!(at_quarter, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn second_derivative_fixture_values_are_two_eps_squared() {
        let report = fixture_product_defect_derivative(&default_fixture_ladder()).unwrap();
        assert!(report.pass, "{}", report.summary_line());
        for ((label, m), e) in report.measured.iter().zip(&report.expected) {
            assert!(
                (m - e).abs() <= 1e-5,
                "{label}: measured {m}, expected {e}"
            );
        }
        let at_half = report
            .measured
            .iter()
            .find(|(l, _)| l == "eps=0.5")
            .unwrap()
            .1;
        assert!((at_half - 0.5).abs() <= 1e-5);
    }

    #[test]
    fn fixture_slopes_match_orders() {
        use crate::asymptotics::SweepResult;
        let first = fixture_first_moment_derivative(&default_fixture_ladder()).unwrap();
        let eps: Vec<f64> = default_fixture_ladder().values();
        let sweep = SweepResult::new(
            eps.clone(),
            first.measured.iter().map(|(_, v)| v.abs()).collect(),
            MultiIndex(vec![1]),
            BoundingBox::interval(-1.0, 1.0).unwrap(),
        );
        assert!((sweep.slope - 1.0).abs() <= 0.05, "slope {}", sweep.slope);
        let second = fixture_product_defect_derivative(&default_fixture_ladder()).unwrap();
        let sweep2 = SweepResult::new(
            eps,
            second.measured.iter().map(|(_, v)| v.abs()).collect(),
            MultiIndex(vec![2]),
            BoundingBox::interval(-1.0, 1.0).unwrap(),
        );
        assert!((sweep2.slope - 2.0).abs() <= 0.05, "slope {}", sweep2.slope);
    }

    #[test]
    fn rho_matches_prescription() {
        let rho = boundary_rho().unwrap();
        // integral zero, exp branch on (0, 1]
        assert!(rho.integrate().norm() < 1e-8);
        for x in [0.2, 0.5, 0.9, 1.0] {
            assert_relative_eq!(rho.eval(&[x]).re, (-1.0f64 / x).exp(), epsilon = 1e-12);
        }
        assert_eq!(rho.eval(&[-0.1]).norm(), 0.0);
        assert_eq!(rho.eval(&[2.1]).norm(), 0.0);
    }

    #[test]
    fn unboundedness_fixture_spot_values() {
        let report = fixture_flat_map_unboundedness(&[4, 10]).unwrap();
        assert!(report.pass, "{}", report.summary_line());
        // n=4: (1/4) e^2 6/14, n=10: (1/10) e^5 6/32
        let expect4 = 0.25 * 2f64.exp() * 6.0 / 14.0;
        let expect10 = 0.1 * 5f64.exp() * 6.0 / 32.0;
        assert_relative_eq!(report.measured[0].1, expect4, max_relative = 1e-4);
        assert_relative_eq!(report.measured[1].1, expect10, max_relative = 1e-4);
    }

    #[test]
    fn unboundedness_fixture_guards_range() {
        assert!(fixture_flat_map_unboundedness(&[50]).is_err());
        let truncated = fixture_flat_map_unboundedness(&[4, 50]).unwrap();
        assert_eq!(truncated.measured.len(), 1);
    }

    #[test]
    fn pairing_bound_holds_and_grows() {
        let report = fixture_pairing_lower_bound(&[0.7, 0.6, 0.5]).unwrap();
        assert!(report.pass, "{}", report.summary_line());
        for ((_, m), e) in report.measured.iter().zip(&report.expected) {
            assert!(m >= e, "value {m} fell below bound {e}");
        }
        // t = 0.5 bound is e^3 - e
        assert_relative_eq!(
            report.expected[2],
            3f64.exp() - std::f64::consts::E,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pairing_bound_rejects_out_of_range_t() {
        assert!(fixture_pairing_lower_bound(&[0.3]).is_err());
        assert!(fixture_pairing_lower_bound(&[0.8]).is_err());
    }

    #[test]
    fn csv_shape() {
        let report = fixture_flat_map_unboundedness(&[4, 6]).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("name,input,measured,expected,rel_err\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
