//! Seeded sampling of admissible parameter tuples.

use rand::Rng;

use crate::params::{critical_exponent, CknParams};

/// Draws `(n, p, q, a)` with `n in 2..=6`, `p in [1.3, 4]`, `q` between `p`
/// and `min(p*, p + 5)` away from both ends, and `H in [0.25, 2.5]`.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R) -> CknParams {
    loop {
        let n: u32 = rng.gen_range(2..=6);
        let p: f64 = rng.gen_range(1.3..4.0);
        let (n, q) = match random_q(rng, n, p) {
            Some(q) => (n, q),
            None => continue,
        };
        let h: f64 = rng.gen_range(0.25..2.5);
        let a = p * h - f64::from(n) + p;
        if let Ok(prm) = CknParams::validate(n, p, q, a) {
            return prm;
        }
    }
}

/// `q` drawn from the middle 90% of `(p, min(p*, p + 5))`.
pub fn random_q<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> Option<f64> {
    let top = critical_exponent(n, p).min(p + 5.0);
    let width = top - p;
    if width <= 0.0 {
        return None;
    }
    Some(p + width * rng.gen_range(0.05..0.95))
}

/// Draws `(n, p, q)` and returns them with `a = a*(n, p, q)`.
pub fn random_threshold_triple<R: Rng + ?Sized>(rng: &mut R) -> (u32, f64, f64) {
    loop {
        let n: u32 = rng.gen_range(2..=6);
        let p: f64 = rng.gen_range(1.3..4.0);
        if let Some(q) = random_q(rng, n, p) {
            return (n, p, q);
        }
    }
}
