//! Second variation of the CKN quotient at the radial extremal `U`, along
//! perturbations `v(|x|) phi_1(x/|x|)` with `phi_1` a first spherical harmonic.
//!
//! Only the sphere eigenvalue `n - 1` of `phi_1` enters. Minimality of `U`
//! requires the quadratic form
//!
//! ```text
//! J(v) = (p-1) ∫ |x|^a |∇U|^{p-2} |∇v|^2 + (n-1) ∫ |x|^{a-2} |∇U|^{p-2} v^2
//!        - (q-1) ∫ |x|^{-b_a} U^{q-2} v^2
//! ```
//!
//! to be nonnegative. For the family `v = |x|^{beta H} U^{q/p}` every term is
//! a combination of three integrals `I0`, `I1`, `I2`, each a `Phi` value, and
//! `J (s1+n)(s2+n) / I0` is the quadratic polynomial [`poly_p`] in `beta`. Its
//! minimum, at `beta = Q/p`, is negative exactly when the discriminant
//! [`discriminant_d`] is negative.

use serde::{Deserialize, Serialize};

use crate::error::{DomainReason, Error, Result};
use crate::extremal::{PhiMethod, PhiQuery, RadialExtremal};
use crate::params::CknParams;
use crate::special::{integrate_log, Decay, QuadratureSpec};

/// `D` within this distance of zero is treated as zero.
pub const D_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// `D < 0`: no minimizer is radial.
    SymmetryBreaking,
    /// `p = 2` and the parameters lie in the known radial-symmetry region.
    RadialProved,
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::SymmetryBreaking => "SYMMETRY_BREAKING",
            Classification::RadialProved => "RADIAL_PROVED",
            Classification::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "SYMMETRY_BREAKING" => Ok(Classification::SymmetryBreaking),
            "RADIAL_PROVED" => Ok(Classification::RadialProved),
            "INCONCLUSIVE" => Ok(Classification::Inconclusive),
            other => Err(format!("unknown classification {other:?}")),
        }
    }
}

/// Exponent `beta` of the test direction `v = r^{beta H} U^{q/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestDirection {
    beta: f64,
}

impl TestDirection {
    pub fn new(params: &CknParams, beta: f64) -> Result<Self> {
        let (lo, hi) = beta_window(params);
        if beta > lo && beta < hi {
            Ok(TestDirection { beta })
        } else {
            Err(Error::domain(
                DomainReason::BetaWindow,
                format!("beta = {beta} outside the summability window ({lo}, {hi})"),
            ))
        }
    }

    /// The minimizing choice `beta = Q/p`.
    pub fn optimal(params: &CknParams) -> Self {
        TestDirection {
            beta: argmin_beta(params),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Open interval of `beta` for which `I0`, `I1`, `I2` converge: the lower end
/// is integrability at the origin, the upper end at infinity.
pub fn beta_window(params: &CknParams) -> (f64, f64) {
    let (p, q) = (params.p(), params.q());
    let big_q = params.big_q();
    let t = p * q / (q - p);
    let lo = -(p + (p - 2.0) * big_q) / 2.0;
    let hi = ((2.0 + t - p) * big_q - p) / 2.0;
    (lo, hi)
}

/// `Q / p = (q - p) / (p (p - 1))`.
pub fn argmin_beta(params: &CknParams) -> f64 {
    params.big_q() / params.p()
}

/// `I0, I1, I2` with the shifted exponents `s1`, `s2` and `M = q - 1 + q/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedIntegrals {
    pub beta: f64,
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub s1: f64,
    pub s2: f64,
    pub m: f64,
}

impl WeightedIntegrals {
    /// Relative defects of `I1 (s1+n) = M I0` and `I2 (s1+n)(s2+n) = M q I0`.
    pub fn reduction_defects(&self, params: &CknParams) -> (f64, f64) {
        let n = params.nf();
        let want1 = self.m * self.i0;
        let want2 = self.m * params.q() * self.i0;
        let d1 = (self.i1 * (self.s1 + n) - want1).abs() / want1.abs();
        let d2 = (self.i2 * (self.s1 + n) * (self.s2 + n) - want2).abs() / want2.abs();
        (d1, d2)
    }
}

/// Shifted exponents `(s0, s1, s2)` of the three `Phi` arguments; `s1 = s0 - gamma`,
/// `s2 = s0 - 2 gamma`.
fn phi_exponents(params: &CknParams, beta: f64) -> (f64, f64, f64) {
    let (p, a) = (params.p(), params.a());
    let h = params.h();
    let g = params.gamma();
    let s0 = a + 2.0 * beta * h - p + g * p;
    (s0, s0 - g, s0 - 2.0 * g)
}

/// `I0 = ∫ |x|^{a+2βH} U^{2q/p-2} |∇U|^p`, `I1 = ∫ |x|^{a+2βH-1} U^{2q/p-1} |∇U|^{p-1}`,
/// `I2 = ∫ |x|^{a+2βH-2} U^{2q/p} |∇U|^{p-2}`, each through `Phi`.
pub fn compute_i(params: &CknParams, beta: f64, method: PhiMethod) -> Result<WeightedIntegrals> {
    let dir = TestDirection::new(params, beta)?;
    let (p, q) = (params.p(), params.q());
    let ext = RadialExtremal::new(params);
    let c = p * params.h() / (p - 1.0);
    let t = p * q / (q - p);
    let (s0, s1, s2) = phi_exponents(params, dir.beta);
    let i0 = c * c * ext.phi(PhiQuery { s: s0, t: t + 2.0 }, method)?;
    let i1 = c * ext.phi(PhiQuery { s: s1, t: t + 1.0 }, method)?;
    let i2 = ext.phi(PhiQuery { s: s2, t }, method)?;
    Ok(WeightedIntegrals {
        beta: dir.beta,
        i0,
        i1,
        i2,
        s1,
        s2,
        m: q - 1.0 + q / p,
    })
}

/// The three summands of [`poly_p`], in order.
pub fn poly_p_terms(params: &CknParams, beta: f64) -> [f64; 3] {
    let (n, p, q) = (params.nf(), params.p(), params.q());
    let bh = beta * params.h();
    let (_, s1, s2) = phi_exponents(params, beta);
    let lead = (p - 1.0) * q * q / (p * p) - (2.0 * q / p - 1.0) * (q - 1.0);
    let cross = (p - 1.0) * q / p - (q - 1.0);
    let pq = p * q + q - p;
    [
        (s1 + n) * (s2 + n) * lead,
        -(2.0 * pq / p) * cross * (s2 + n) * bh,
        (q * pq / p) * ((p - 1.0) * bh * bh + (n - 1.0)),
    ]
}

/// `J(v_beta) (s1+n)(s2+n) / I0` as an explicit polynomial in `beta`.
pub fn poly_p(params: &CknParams, beta: f64) -> f64 {
    poly_p_terms(params, beta).iter().sum()
}

/// `D = (n-1) - H^2 (q-p)(pq-q+p)/p^2`; negative exactly when symmetry breaking
/// is certified.
pub fn discriminant_d(params: &CknParams) -> f64 {
    let (n, p, q) = (params.nf(), params.p(), params.q());
    let h = params.h();
    (n - 1.0) - h * h * (q - p) * (p * q - q + p) / (p * p)
}

/// Both sides of the breaking condition in ratio form,
/// `H^2/(n-1) > 1/(q-p) - 1/(q+p')`.
pub fn breaking_ratio_sides(params: &CknParams) -> (f64, f64) {
    let (n, p, q) = (params.nf(), params.p(), params.q());
    let h = params.h();
    let p_conj = p / (p - 1.0);
    (h * h / (n - 1.0), 1.0 / (q - p) - 1.0 / (q + p_conj))
}

/// The weight exponent at which `D` vanishes:
/// `a* = p - n + p sqrt((n-1)(1/(q-p) - 1/(q+p')))`.
pub fn a_star(n: u32, p: f64, q: f64) -> Result<f64> {
    // any admissible a validates (n, p, q)
    CknParams::validate(n, p, q, p - f64::from(n) + 1.0)?;
    let nf = f64::from(n);
    let p_conj = p / (p - 1.0);
    Ok(p - nf + p * ((nf - 1.0) * (1.0 / (q - p) - 1.0 / (q + p_conj))).sqrt())
}

fn del_radial_region(params: &CknParams) -> bool {
    let (n, q, a) = (params.nf(), params.q(), params.a());
    let lhs = ((n - 2.0 + a) / 2.0).powi(2) / (n - 1.0);
    lhs <= 1.0 / (q - 2.0) - 0.25
}

/// Three-way classification. The radial region is only known for `p = 2`
/// (compared exactly).
pub fn classify(params: &CknParams) -> Classification {
    let d = discriminant_d(params);
    let (lhs, rhs) = breaking_ratio_sides(params);
    let difference_form = d < -D_ZERO_TOL;
    let ratio_form = lhs > rhs;
    if difference_form && ratio_form {
        return Classification::SymmetryBreaking;
    }
    if params.p() == 2.0 && del_radial_region(params) {
        return Classification::RadialProved;
    }
    Classification::Inconclusive
}

/// Everything the closed-form analysis reports at one `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondVariationReport {
    pub beta: f64,
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub s1: f64,
    pub s2: f64,
    pub m: f64,
    #[serde(rename = "P")]
    pub p_value: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub a_star: f64,
    pub classification: Classification,
    pub reduction_defect_1: f64,
    pub reduction_defect_2: f64,
}

pub fn report(params: &CknParams, beta: f64, method: PhiMethod) -> Result<SecondVariationReport> {
    let ints = compute_i(params, beta, method)?;
    let (d1, d2) = ints.reduction_defects(params);
    Ok(SecondVariationReport {
        beta: ints.beta,
        i0: ints.i0,
        i1: ints.i1,
        i2: ints.i2,
        s1: ints.s1,
        s2: ints.s2,
        m: ints.m,
        p_value: poly_p(params, ints.beta),
        d: discriminant_d(params),
        a_star: a_star(params.n(), params.p(), params.q())?,
        classification: classify(params),
        reduction_defect_1: d1,
        reduction_defect_2: d2,
    })
}

/// Terms of `J(v_beta)` by direct quadrature, sphere area included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    /// `omega ∫ r^{n-1+a} |U'|^{p-2} v'^2 dr`
    pub g2: f64,
    /// `omega ∫ r^{n-3+a} |U'|^{p-2} v^2 dr`
    pub g0: f64,
    /// `omega ∫ r^{n-1-b_a} U^{q-2} v^2 dr`
    pub gq: f64,
    pub j: f64,
}

/// `J(v_beta) = (p-1) G2 + (n-1) G0 - (q-1) Gq` with `v = r^{beta H} U^{q/p}`,
/// integrated directly rather than through `Phi`.
pub fn quadrature_j(params: &CknParams, beta: f64, spec: &QuadratureSpec) -> Result<QuadraticForm> {
    let dir = TestDirection::new(params, beta)?;
    let ext = RadialExtremal::new(params);
    let d = ext.derived();
    let (n, p, q, a) = (params.nf(), params.p(), params.q(), params.a());
    let g = d.gamma;
    let kappa = p / (q - p);
    let bh = dir.beta() * d.h;
    // v'/v = (bh - slope * sigma(g s)) / r
    let slope = q / p * kappa * g;

    let ln_v = |s: f64| bh * s + q / p * ext.ln_u_at(s);
    let gradient_weight = |s: f64| (n - 2.0 + a) * s + (p - 2.0) * ext.ln_abs_du_at(s);

    let t = p * q / (q - p);
    let rate0 = (n - 2.0 + a) + (g - 1.0) * (p - 2.0) + 2.0 * bh;
    let decay_grad = Decay {
        at_zero: rate0,
        at_infinity: t * g - rate0,
    };
    let g0 = integrate_log(|s| (gradient_weight(s) + 2.0 * ln_v(s)).exp(), Some(decay_grad), spec)?;
    let g2 = integrate_log(
        |s| {
            let sigma = 1.0 / (1.0 + (-g * s).exp());
            let factor = bh - slope * sigma;
            (gradient_weight(s) + 2.0 * ln_v(s)).exp() * factor * factor
        },
        Some(decay_grad),
        spec,
    )?;

    let rate0_q = n - d.b_a + 2.0 * bh;
    let decay_q = Decay {
        at_zero: rate0_q,
        at_infinity: kappa * (q - 2.0 + 2.0 * q / p) * g - rate0_q,
    };
    let gq = integrate_log(
        |s| ((n - d.b_a) * s + (q - 2.0) * ext.ln_u_at(s) + 2.0 * ln_v(s)).exp(),
        Some(decay_q),
        spec,
    )?;

    let omega = d.omega;
    let (g2, g0, gq) = (omega * g2, omega * g0, omega * gq);
    Ok(QuadraticForm {
        g2,
        g0,
        gq,
        j: (p - 1.0) * g2 + (n - 1.0) * g0 - (q - 1.0) * gq,
    })
}
