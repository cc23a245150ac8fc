//! The explicit radial extremal and the integrals built on it.
//!
//! The radial solution of
//!
//! ```text
//! -div(|x|^a |∇u|^{p-2} ∇u) = |x|^{-b_a} |u|^{q-2} u
//! ```
//!
//! is `U(r) = C (1 + r^gamma)^{-p/(q-p)}` with `gamma = Q H`. Every weighted
//! integral of `U` and its derivative reduces to a member of the family
//!
//! ```text
//! Phi(s, t) = K ∫_0^∞ r^{s+n-1} (1 + r^gamma)^{-t} dr,   0 < s + n < t gamma,
//! ```
//!
//! which equals `(K / gamma) B((s+n)/gamma, t - (s+n)/gamma)`. Both the Beta
//! closed form and direct quadrature are available through [`PhiMethod`].

use serde::{Deserialize, Serialize};

use crate::error::{DomainReason, Error, Result};
use crate::params::{extremal_normalization, CknParams, Derived};
use crate::special::{beta, integrate_log, log_beta, softplus, Decay, QuadratureSpec};

/// How `Phi` integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PhiMethod {
    /// Beta-function closed form.
    #[default]
    Closed,
    /// Adaptive quadrature on the half-line.
    Quadrature(QuadratureSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialExtremal {
    params: CknParams,
    derived: Derived,
    c: f64,
    gamma: f64,
    /// `p / (q - p)`, the decay power of `1 + r^gamma`.
    kappa: f64,
}

impl RadialExtremal {
    pub fn new(params: &CknParams) -> Self {
        let derived = params.derive();
        RadialExtremal {
            params: *params,
            derived,
            c: extremal_normalization(params),
            gamma: derived.gamma,
            kappa: params.p() / (params.q() - params.p()),
        }
    }

    pub fn params(&self) -> &CknParams {
        &self.params
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }

    /// Normalization constant `C = U(0)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `ln U(e^s)`.
    pub(crate) fn ln_u_at(&self, s: f64) -> f64 {
        self.c.ln() - self.kappa * softplus(self.gamma * s)
    }

    /// `ln |U'(e^s)|`.
    pub(crate) fn ln_abs_du_at(&self, s: f64) -> f64 {
        (self.c * self.kappa * self.gamma).ln() + (self.gamma - 1.0) * s
            - (self.kappa + 1.0) * softplus(self.gamma * s)
    }

    /// `U(r)` for `r >= 0`.
    pub fn u(&self, r: f64) -> f64 {
        if r == 0.0 {
            self.c
        } else {
            self.ln_u_at(r.ln()).exp()
        }
    }

    /// `U'(r)` for `r > 0`; always negative.
    pub fn du(&self, r: f64) -> f64 {
        -self.ln_abs_du_at(r.ln()).exp()
    }

    /// Radial Euler-Lagrange residual
    /// `-(r^{n-1+a} |U'|^{p-2} U')' - r^{n-1-b_a} U^{q-1}` at `r > 0`.
    pub fn el_residual(&self, r: f64) -> f64 {
        self.el_residual_terms(r).residual
    }

    /// Residual together with the magnitude of its largest constituent.
    pub fn el_residual_terms(&self, r: f64) -> Residual {
        profile_residual(&self.params, &self.derived, self.c, 1.0, r)
    }

    /// Residual of the dilated profile `rho^H U(rho r)`, evaluated from its own
    /// closed form `rho^H C (1 + rho^gamma r^gamma)^{-p/(q-p)}`.
    pub fn el_residual_dilated(&self, rho: f64, r: f64) -> Residual {
        let amp = rho.powf(self.derived.h) * self.c;
        let lambda = rho.powf(self.gamma);
        profile_residual(&self.params, &self.derived, amp, lambda, r)
    }

    /// Beta-function evaluation of `Phi(s, t)`.
    pub fn phi_closed(&self, query: PhiQuery) -> Result<f64> {
        self.check_window(query)?;
        let x = (query.s + self.params.nf()) / self.gamma;
        Ok(self.derived.k / self.gamma * beta(x, query.t - x)?)
    }

    /// Quadrature evaluation of `Phi(s, t)`.
    pub fn phi_quadrature(&self, query: PhiQuery, spec: &QuadratureSpec) -> Result<f64> {
        self.check_window(query)?;
        let m = query.s + self.params.nf();
        let (t, g) = (query.t, self.gamma);
        let decay = Decay {
            at_zero: m,
            at_infinity: t * g - m,
        };
        // centre on the peak and divide it out, so tiny values keep full relative accuracy
        let ln_f = |s: f64| m * s - t * softplus(g * s);
        let s_peak = (m / (t * g - m)).ln() / g;
        let ln_peak = ln_f(s_peak);
        let integral = integrate_log(|u| (ln_f(u + s_peak) - ln_peak).exp(), Some(decay), spec)?;
        Ok(self.derived.k * integral * ln_peak.exp())
    }

    pub fn phi(&self, query: PhiQuery, method: PhiMethod) -> Result<f64> {
        match method {
            PhiMethod::Closed => self.phi_closed(query),
            PhiMethod::Quadrature(spec) => self.phi_quadrature(query, &spec),
        }
    }

    /// `(Phi(s, t), t gamma / (s + n) * Phi(s + gamma, t + 1))`.
    pub fn phi_recurrence_check(&self, s: f64, t: f64, method: PhiMethod) -> Result<(f64, f64)> {
        let lhs = self.phi(PhiQuery { s, t }, method)?;
        let shifted = self.phi(
            PhiQuery {
                s: s + self.gamma,
                t: t + 1.0,
            },
            method,
        )?;
        let rhs = t * self.gamma / (s + self.params.nf()) * shifted;
        Ok((lhs, rhs))
    }

    fn check_window(&self, query: PhiQuery) -> Result<()> {
        let m = query.s + self.params.nf();
        if query.s.is_finite() && query.t.is_finite() && m > 0.0 && m < query.t * self.gamma {
            Ok(())
        } else {
            Err(Error::domain(
                DomainReason::PhiWindow,
                format!(
                    "need 0 < s + n < t * gamma, got s + n = {m}, t * gamma = {}",
                    query.t * self.gamma
                ),
            ))
        }
    }

    /// `E = omega ∫ r^{n-1-b_a} U^q dr` in closed form. By the equation this
    /// also equals `omega ∫ r^{n-1+a} |U'|^p dr`.
    pub fn energy(&self) -> f64 {
        let (p, q) = (self.params.p(), self.params.q());
        let lb = log_beta(q * (p - 1.0) / (q - p), q / (q - p)).expect("positive Beta arguments");
        (self.derived.omega.ln() + q * self.c.ln() - self.gamma.ln() + lb).exp()
    }

    /// `omega ∫ r^{n-1-b_a} U^q dr` by quadrature.
    pub fn energy_quadrature(&self, spec: &QuadratureSpec) -> Result<f64> {
        let q = self.params.q();
        let qh = q * self.derived.h;
        let decay = Decay {
            at_zero: qh,
            at_infinity: q * self.kappa * self.gamma - qh,
        };
        let integral = integrate_log(|s| (qh * s + q * self.ln_u_at(s)).exp(), Some(decay), spec)?;
        Ok(self.derived.omega * integral)
    }

    /// `omega ∫ r^{n-1+a} |U'|^p dr` by quadrature.
    pub fn gradient_energy_quadrature(&self, spec: &QuadratureSpec) -> Result<f64> {
        let p = self.params.p();
        let ph = p * self.derived.h;
        let decay = Decay {
            at_zero: ph + p * (self.gamma - 1.0) + p,
            at_infinity: p * (self.kappa + 1.0) * self.gamma - ph - p * self.gamma,
        };
        let integral =
            integrate_log(|s| (ph * s + p * (self.ln_abs_du_at(s) + s)).exp(), Some(decay), spec)?;
        Ok(self.derived.omega * integral)
    }
}

/// A point `(s, t)` of the `Phi` family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiQuery {
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub residual: f64,
    /// Largest magnitude among the terms that cancel in `residual`.
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// Residual of `u(r) = amp (1 + lambda r^gamma)^{-kappa}` with the outer
/// derivative of the flux taken analytically.
fn profile_residual(params: &CknParams, d: &Derived, amp: f64, lambda: f64, r: f64) -> Residual {
    let (n, p, q, a) = (params.nf(), params.p(), params.q(), params.a());
    let g = d.gamma;
    let kappa = p / (q - p);
    let lr = r.ln();
    let sp = softplus(lambda.ln() + g * lr);

    // flux = -A0 r^e (1 + lambda r^g)^{-m}
    let ln_a0 = (p - 1.0) * (amp * kappa * g * lambda).ln();
    let e = n - 1.0 + a + (g - 1.0) * (p - 1.0);
    let m = (kappa + 1.0) * (p - 1.0);

    let t1 = (ln_a0 + e.ln() + (e - 1.0) * lr - m * sp).exp();
    let t2 = (ln_a0 + (m * g * lambda).ln() + (e + g - 1.0) * lr - (m + 1.0) * sp).exp();
    let rhs = ((n - 1.0 - d.b_a) * lr + (q - 1.0) * (amp.ln() - kappa * sp)).exp();

    Residual {
        residual: t1 - t2 - rhs,
        scale: t1.max(t2).max(rhs),
    }
}

/// Radial best constant `S^rad = E^{1 - p/q}`.
pub fn s_rad(params: &CknParams) -> f64 {
    let e = RadialExtremal::new(params).energy();
    e.powf(1.0 - params.p() / params.q())
}

/// Predicts `S^rad(a')` from `S^rad(a)` by `t^{p-1+p/q}`, `t = (n-p+a')/(n-p+a)`.
pub fn scaling_law(params: &CknParams, a_prime: f64, s_rad_at_a: f64) -> Result<f64> {
    let (n, p, q) = (params.nf(), params.p(), params.q());
    if !(a_prime > p - n) {
        return Err(Error::domain(
            DomainReason::ANotAboveHardy,
            format!("a' = {a_prime} must exceed p - n = {}", p - n),
        ));
    }
    let t = (n - p + a_prime) / (n - p + params.a());
    Ok(t.powf(p - 1.0 + p / q) * s_rad_at_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn base() -> RadialExtremal {
        RadialExtremal::new(&CknParams::validate(3, 2.0, 4.0, 0.0).unwrap())
    }

    #[test]
    fn hand_evaluated_extremal() {
        let ext = base();
        assert!((ext.c() - SQRT_2).abs() < 1e-15);
        assert_eq!(ext.gamma(), 1.0);
        for r in [0.0, 0.3, 1.0, 7.5] {
            assert!((ext.u(r) - SQRT_2 / (1.0 + r)).abs() < 1e-15);
        }
        assert!((ext.u(1.0) - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((ext.du(1.0) + SQRT_2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_zero_and_one() {
        for (n, p, q, a) in [(3, 2.0, 4.0, 0.0), (4, 1.5, 2.2, 0.7), (2, 3.0, 5.0, 1.5)] {
            let prm = CknParams::validate(n, p, q, a).unwrap();
            let ext = RadialExtremal::new(&prm);
            assert_eq!(ext.u(0.0), ext.c());
            let want = ext.c() * 2f64.powf(-p / (q - p));
            assert!((ext.u(1.0) - want).abs() < 1e-14 * want);
        }
    }

    #[test]
    fn decay_at_infinity_and_monotone() {
        let prm = CknParams::validate(4, 2.5, 4.0, 1.0).unwrap();
        let ext = RadialExtremal::new(&prm);
        let (p, q) = (prm.p(), prm.q());
        let r = 1e12;
        let lead = ext.u(r) * r.powf(p * ext.gamma() / (q - p));
        assert!((lead / ext.c() - 1.0).abs() < 1e-6);
        let mut prev = ext.u(1e-6);
        for i in 1..200 {
            let r = 1e-6 * 1.15f64.powi(i);
            assert!(ext.du(r) < 0.0);
            let u = ext.u(r);
            assert!(u < prev);
            prev = u;
        }
    }

    #[test]
    fn residual_laplacian_case() {
        let ext = base();
        for r in [0.1, 1.0, 10.0] {
            let res = ext.el_residual_terms(r);
            assert!(res.relative() <= 1e-10, "r={r}: {res:?}");
            // -Delta U = 2 sqrt2 / (r (1+r)^3) in radial form: rhs = r^{n-1} * that
            let rhs = 2.0 * SQRT_2 * r / (1.0 + r).powi(3);
            assert!((res.scale - rhs).abs() <= 1e-14 * res.scale.max(rhs) || res.scale > rhs);
        }
    }

    #[test]
    fn residual_dilated_profile() {
        let prm = CknParams::validate(3, 3.0, 5.0, 0.5).unwrap();
        let ext = RadialExtremal::new(&prm);
        for r in [0.05, 0.7, 3.0, 40.0] {
            assert!(ext.el_residual_dilated(2.0, r).relative() <= 1e-12);
            assert!(ext.el_residual_dilated(0.5, r).relative() <= 1e-12);
        }
    }

    #[test]
    fn residual_detects_wrong_normalization() {
        let prm = CknParams::validate(3, 2.0, 4.0, 0.0).unwrap();
        let d = prm.derive();
        let bad = profile_residual(&prm, &d, 1.1 * SQRT_2, 1.0, 1.0);
        assert!(bad.relative() > 1e-3);
    }

    #[test]
    fn phi_hand_value() {
        let ext = base();
        let k = ext.derived().k;
        let v = ext.phi_closed(PhiQuery { s: -1.0, t: 4.0 }).unwrap();
        assert!((v - k / 6.0).abs() < 1e-14 * k);
        let spec = QuadratureSpec::default();
        let vq = ext.phi_quadrature(PhiQuery { s: -1.0, t: 4.0 }, &spec).unwrap();
        assert!((vq - k / 6.0).abs() < 1e-9 * k);
    }

    #[test]
    fn phi_closed_vs_quadrature_at_origin_query() {
        let ext = base();
        let q = PhiQuery { s: 0.0, t: 4.0 };
        let a = ext.phi_closed(q).unwrap();
        let b = ext.phi_quadrature(q, &QuadratureSpec::default()).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn phi_window_violations() {
        let ext = base();
        let spec = QuadratureSpec::default();
        for q in [
            PhiQuery { s: 1.0, t: 4.0 },  // s + n = t gamma
            PhiQuery { s: -3.0, t: 4.0 }, // s + n = 0
            PhiQuery { s: 5.0, t: 4.0 },
        ] {
            assert_eq!(ext.phi_closed(q).unwrap_err().reason(), Some(DomainReason::PhiWindow));
            assert_eq!(
                ext.phi_quadrature(q, &spec).unwrap_err().reason(),
                Some(DomainReason::PhiWindow)
            );
        }
    }

    #[test]
    fn phi_recurrence_both_methods() {
        let ext = base();
        let (l, r) = ext.phi_recurrence_check(-1.0, 4.0, PhiMethod::Closed).unwrap();
        assert!((l - r).abs() <= 1e-12 * l);
        let quad = PhiMethod::Quadrature(QuadratureSpec::default());
        let (l, r) = ext.phi_recurrence_check(-1.0, 4.0, quad).unwrap();
        assert!((l - r).abs() <= 1e-9 * l);
    }

    #[test]
    fn energy_and_best_constant_hand_values() {
        let prm = CknParams::validate(3, 2.0, 4.0, 0.0).unwrap();
        let ext = RadialExtremal::new(&prm);
        assert!((ext.energy() - 8.0 * PI / 3.0).abs() < 1e-13);
        assert!((s_rad(&prm) - 2.894_405_018_233_070_6).abs() < 1e-13);
        let spec = QuadratureSpec::default();
        let eq = ext.energy_quadrature(&spec).unwrap();
        let eg = ext.gradient_energy_quadrature(&spec).unwrap();
        assert!((eq - 8.0 * PI / 3.0).abs() < 1e-8);
        assert!((eg - 8.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn scaling_law_cases() {
        let p0 = CknParams::validate(3, 2.0, 4.0, 0.0).unwrap();
        let s0 = s_rad(&p0);
        assert_eq!(scaling_law(&p0, 0.0, s0).unwrap(), s0);
        let s1 = s_rad(&p0.with_a(1.0).unwrap());
        let pred = scaling_law(&p0, 1.0, s0).unwrap();
        assert!((pred - 2f64.powf(1.5) * s0).abs() < 1e-12 * pred);
        assert!((pred - s1).abs() < 1e-10 * s1);
        assert!(scaling_law(&p0, -1.0, s0).is_err());
        let mut prev = 0.0;
        for i in 0..20 {
            let v = scaling_law(&p0, -0.9 + 0.3 * i as f64, s0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
