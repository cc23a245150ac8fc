//! Self-consistency batteries. Every check compares two independently
//! computed quantities, so a wrong constant anywhere shows up as a failure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{s_rad, scaling_law, PhiMethod, PhiQuery, RadialExtremal};
use crate::params::CknParams;
use crate::sample::random_params;
use crate::second_variation::{self, argmin_beta, compute_i, discriminant_d, poly_p_terms, quadrature_j};
use crate::special::QuadratureSpec;

/// Seed of the randomized `full` battery.
pub const FULL_SEED: u64 = 0xC0FF_EE05;
/// Number of tuples in the `full` battery.
pub const FULL_CASES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl std::str::FromStr for VerifyLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            other => Err(format!("unknown level {other:?} (expected fast or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    /// Largest observed defect, in the units `tolerance` is stated in.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// First failing case, if any.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Fixed tuples of the `fast` battery: both sides of the threshold, `p` below,
/// at and above 2, and `n` from 2 to 6.
pub fn fast_tuples() -> Vec<CknParams> {
    [
        (3, 2.0, 4.0, 0.0),
        (3, 2.0, 3.0, 2.0),
        (3, 2.0, 5.0, -0.5),
        (2, 2.0, 6.0, 1.0),
        (4, 2.0, 3.0, 3.0),
        (3, 1.5, 2.5, 0.5),
        (3, 3.0, 4.0, 1.0),
        (5, 2.5, 3.5, 4.0),
        (4, 1.7, 2.2, 0.0),
        (6, 3.5, 8.0, -1.0),
        (2, 1.3, 3.5, 0.7),
        (3, 4.0, 6.0, 2.5),
    ]
    .into_iter()
    .map(|(n, p, q, a)| CknParams::validate(n, p, q, a).expect("fixed tuple is admissible"))
    .collect()
}

/// Tuples of the `full` battery, drawn from [`FULL_SEED`].
pub fn full_tuples() -> Vec<CknParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(FULL_SEED);
    (0..FULL_CASES).map(|_| random_params(&mut rng)).collect()
}

type AStarFn = fn(u32, f64, f64) -> Result<f64>;

/// Runs the batteries. The threshold formula is a field so a deliberately
/// broken one can be plugged in to see the battery catch it.
#[derive(Debug, Clone, Copy)]
pub struct Verifier {
    pub a_star: AStarFn,
    pub spec: QuadratureSpec,
}

impl Default for Verifier {
    fn default() -> Self {
        Verifier {
            a_star: second_variation::a_star,
            spec: QuadratureSpec::default(),
        }
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
    detail: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
            detail: None,
        }
    }

    fn record(&mut self, prm: &CknParams, defect: Result<f64>) {
        match defect {
            Ok(v) => {
                self.cases += 1;
                // NaN counts as a failure
                let v = if v.is_nan() { f64::INFINITY } else { v };
                self.worst = self.worst.max(v);
                if v > self.tolerance && self.detail.is_none() {
                    self.detail = Some(format!("{prm:?}: defect {v:e}"));
                }
            }
            Err(e) => self.fail(prm, &e.to_string()),
        }
    }

    fn fail(&mut self, prm: &CknParams, msg: &str) {
        self.cases += 1;
        self.worst = f64::INFINITY;
        if self.detail.is_none() {
            self.detail = Some(format!("{prm:?}: {msg}"));
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            cases: self.cases,
            passed: self.detail.is_none(),
            worst: self.worst,
            tolerance: self.tolerance,
            detail: self.detail,
        }
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs())
}

impl Verifier {
    pub fn run(&self, level: VerifyLevel) -> VerifyReport {
        let tuples = match level {
            VerifyLevel::Fast => fast_tuples(),
            VerifyLevel::Full => full_tuples(),
        };
        VerifyReport {
            level,
            checks: self.run_on(&tuples),
        }
    }

    pub fn run_on(&self, tuples: &[CknParams]) -> Vec<CheckResult> {
        let quad = PhiMethod::Quadrature(self.spec);
        let mut el = Tally::new("euler_lagrange_residual", 1e-8);
        let mut phi = Tally::new("phi_closed_vs_quadrature", 1e-8);
        let mut rec = Tally::new("phi_recurrence", 1e-9);
        let mut red = Tally::new("reduction_identities", 1e-9);
        let mut jq = Tally::new("quadratic_form_contract", 1e-7);
        let mut d_at = Tally::new("discriminant_at_threshold", 1e-12);
        let mut p_at = Tally::new("polynomial_at_threshold", 1e-8);
        let mut scal = Tally::new("scaling_law", 1e-10);
        let mut energy = Tally::new("energy_closed_vs_quadrature", 1e-8);

        for prm in tuples {
            let ext = RadialExtremal::new(prm);
            let (n, p, q) = (prm.n(), prm.p(), prm.q());

            let worst_el = (0..20)
                .map(|i| {
                    let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 19.0);
                    ext.el_residual_terms(r).relative()
                })
                .fold(0.0, f64::max);
            el.record(prm, Ok(worst_el));

            let beta = argmin_beta(prm);
            let t = p * q / (q - p);
            let closed = compute_i(prm, beta, PhiMethod::Closed);
            let s2 = || closed.as_ref().map(|w| w.s2).map_err(|e| Error::Convergence(e.to_string()));
            phi.record(
                prm,
                s2().and_then(|s| {
                    let query = PhiQuery { s, t };
                    Ok(rel(ext.phi_closed(query)?, ext.phi(query, quad)?))
                }),
            );
            rec.record(
                prm,
                s2().and_then(|s| {
                    let (l, r) = ext.phi_recurrence_check(s, t, PhiMethod::Closed)?;
                    Ok(rel(l, r))
                }),
            );

            red.record(
                prm,
                compute_i(prm, beta, PhiMethod::Closed).map(|w| {
                    let (d1, d2) = w.reduction_defects(prm);
                    d1.max(d2)
                }),
            );

            jq.record(
                prm,
                (|| {
                    let w = compute_i(prm, beta, PhiMethod::Closed)?;
                    let form = quadrature_j(prm, beta, &self.spec)?;
                    let nf = prm.nf();
                    let scale = ((p - 1.0) * form.g2)
                        .abs()
                        .max(((nf - 1.0) * form.g0).abs())
                        .max(((q - 1.0) * form.gq).abs());
                    let closed = second_variation::poly_p(prm, beta) * w.i0
                        / ((w.s1 + nf) * (w.s2 + nf));
                    Ok((form.j - closed).abs() / scale)
                })(),
            );

            match (self.a_star)(n, p, q).and_then(|a| prm.with_a(a)) {
                Ok(at) => {
                    let d = discriminant_d(&at);
                    d_at.record(&at, Ok(d.abs() / (prm.nf() - 1.0)));
                    let terms = poly_p_terms(&at, argmin_beta(&at));
                    let scale = terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    p_at.record(&at, Ok(terms.iter().sum::<f64>().abs() / scale));
                }
                Err(e) => {
                    d_at.fail(prm, &e.to_string());
                    p_at.fail(prm, &e.to_string());
                }
            }

            scal.record(
                prm,
                (|| {
                    let a2 = prm.a() + 0.5;
                    let predicted = scaling_law(prm, a2, s_rad(prm))?;
                    Ok(rel(predicted, s_rad(&prm.with_a(a2)?)))
                })(),
            );

            energy.record(
                prm,
                ext.energy_quadrature(&self.spec).map(|e| rel(e, ext.energy())),
            );
        }

        [el, phi, rec, red, jq, d_at, p_at, scal, energy]
            .into_iter()
            .map(Tally::finish)
            .collect()
    }
}

/// Runs the default batteries at `level`.
pub fn run(level: VerifyLevel) -> VerifyReport {
    Verifier::default().run(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_battery_passes() {
        let rep = run(VerifyLevel::Fast);
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
            assert_eq!(c.cases, 12);
        }
    }

    #[test]
    fn broken_threshold_is_caught() {
        fn shifted(n: u32, p: f64, q: f64) -> Result<f64> {
            Ok(second_variation::a_star(n, p, q)? + 1e-3)
        }
        let v = Verifier {
            a_star: shifted,
            ..Verifier::default()
        };
        let rep = v.run(VerifyLevel::Fast);
        assert!(!rep.passed());
        let failing: Vec<&str> = rep
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        assert!(failing.contains(&"discriminant_at_threshold"));
        assert!(failing.contains(&"polynomial_at_threshold"));
    }

    #[test]
    fn full_tuples_are_reproducible() {
        assert_eq!(full_tuples(), full_tuples());
        assert_eq!(full_tuples().len(), FULL_CASES);
    }
}
