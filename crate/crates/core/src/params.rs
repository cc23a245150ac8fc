//! Problem parameters and the exponents derived from them.
//!
//! A parameter tuple `(n, p, q, a)` describes the weighted inequality
//!
//! ```text
//! c (∫ |x|^{-b_a} |u|^q dx)^{p/q} <= ∫ |x|^a |∇u|^p dx,   b_a = n - q (n - p + a) / p
//! ```
//!
//! on `R^n`. It is admissible when `n >= 2`, `1 < p < q < p*` and `a > p - n`.

use serde::{Deserialize, Serialize};

use crate::error::{DomainReason, Error, Result};
use crate::special::log_gamma;

/// Validated parameters `(n, p, q, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknParams {
    n: u32,
    p: f64,
    q: f64,
    a: f64,
}

/// Critical Sobolev exponent `np/(n-p)`, or `+inf` when `p >= n`.
pub fn critical_exponent(n: u32, p: f64) -> f64 {
    let nf = f64::from(n);
    if p < nf {
        nf * p / (nf - p)
    } else {
        f64::INFINITY
    }
}

impl CknParams {
    /// Checks every admissibility constraint. Constraints are checked in the
    /// order `n`, `p`, `q > p`, `q < p*`, `a > p - n`.
    pub fn validate(n: u32, p: f64, q: f64, a: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && a.is_finite()) {
            return Err(Error::domain(
                DomainReason::InvalidInput,
                format!("non-finite parameter (p={p}, q={q}, a={a})"),
            ));
        }
        if n < 2 {
            return Err(Error::domain(
                DomainReason::DimensionTooSmall,
                format!("n = {n} must be at least 2"),
            ));
        }
        if p <= 1.0 {
            return Err(Error::domain(
                DomainReason::PNotAboveOne,
                format!("p = {p} must exceed 1"),
            ));
        }
        if q <= p {
            return Err(Error::domain(
                DomainReason::QNotAboveP,
                format!("q = {q} must exceed p = {p}"),
            ));
        }
        let p_star = critical_exponent(n, p);
        if q >= p_star {
            return Err(Error::domain(
                DomainReason::QNotBelowCritical,
                format!("q = {q} must be below p* = {p_star}"),
            ));
        }
        let floor = p - f64::from(n);
        if a <= floor {
            return Err(Error::domain(
                DomainReason::ANotAboveHardy,
                format!("a = {a} must exceed p - n = {floor}"),
            ));
        }
        Ok(CknParams { n, p, q, a })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Same `(n, p, q)` with a different weight exponent.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        CknParams::validate(self.n, self.p, self.q, a)
    }

    /// `H = (n - p + a) / p`, the dilation exponent.
    pub fn h(&self) -> f64 {
        (self.nf() - self.p + self.a) / self.p
    }

    /// `Q = (q - p) / (p - 1)`.
    pub fn big_q(&self) -> f64 {
        (self.q - self.p) / (self.p - 1.0)
    }

    /// `gamma = Q H`, the radial exponent of the extremal.
    pub fn gamma(&self) -> f64 {
        self.big_q() * self.h()
    }

    pub fn derive(&self) -> Derived {
        Derived::from_params(self)
    }
}

/// Every derived exponent and constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub b_a: f64,
    pub h: f64,
    pub big_q: f64,
    pub p_conj: f64,
    pub p_star: f64,
    /// Surface measure of the unit sphere `S^{n-1}`.
    pub omega: f64,
    pub gamma: f64,
    /// Prefactor of the `Phi` family of integrals.
    pub k: f64,
}

impl Derived {
    fn from_params(params: &CknParams) -> Self {
        let (n, p, q) = (params.nf(), params.p, params.q);
        let h = params.h();
        let big_q = params.big_q();
        let c = extremal_normalization(params);
        let omega = sphere_area(params.n);
        let k = (p * h / (p - 1.0)).powf(p - 2.0) * c.powf(2.0 * q / p + p - 2.0) * omega;
        Derived {
            b_a: n - q * h,
            h,
            big_q,
            p_conj: p / (p - 1.0),
            p_star: critical_exponent(params.n, p),
            omega,
            gamma: big_q * h,
            k,
        }
    }
}

/// Normalization `C` of the radial extremal.
pub(crate) fn extremal_normalization(params: &CknParams) -> f64 {
    let (p, q) = (params.p, params.q);
    let base = (q / p) * (p * params.h()).powf(p) / (p - 1.0).powf(p - 1.0);
    base.powf(1.0 / (q - p))
}

/// `2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let half = 0.5 * f64::from(n);
    let lg = log_gamma(half).expect("n/2 > 0");
    2.0 * (half * std::f64::consts::PI.ln() - lg).exp()
}

/// Best constant `H^p` of the weighted Hardy inequality.
pub fn hardy_constant(params: &CknParams) -> f64 {
    params.h().powf(params.p)
}
