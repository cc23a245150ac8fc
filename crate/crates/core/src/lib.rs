//! Numerics for the best constant of weighted first-order Sobolev inequalities
//! with power weights
//!
//! ```text
//! S_p(a, q) = inf_{u != 0}  ∫ |x|^a |∇u|^p dx / (∫ |x|^{-b_a} |u|^q dx)^{p/q}
//! ```
//!
//! on `R^n`, with `1 < p < q < p*`, `a > p - n` and `b_a = n - q (n - p + a) / p`.
//!
//! The crate evaluates the explicit radial extremal, the radial best constant,
//! the closed-form second variation along the first spherical harmonic, and a
//! discretized stability pencil that certifies when no minimizer can be
//! radial. [`scan`] maps the symmetry-breaking region over `(q, a)` grids.
//!
//! ```
//! use ckn::{CknParams, second_variation::{a_star, classify, Classification}};
//!
//! let prm = CknParams::validate(3, 2.0, 3.0, 2.0)?;
//! assert_eq!(classify(&prm), Classification::SymmetryBreaking);
//! assert!((a_star(3, 2.0, 3.0)? - 1.5298221281347035).abs() < 1e-12);
//! # Ok::<(), ckn::Error>(())
//! ```

pub mod error;
pub mod extremal;
pub mod params;
pub mod sample;
pub mod scan;
pub mod second_variation;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{DomainReason, Error, Result};
pub use extremal::{s_rad, scaling_law, PhiMethod, PhiQuery, RadialExtremal};
pub use params::{hardy_constant, CknParams, Derived};
pub use special::QuadratureSpec;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    mod parameters {}
    #[doc = include_str!("../../../book/src/extremal.md")]
    mod extremal {}
    #[doc = include_str!("../../../book/src/second_variation.md")]
    mod second_variation {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/scan.md")]
    mod scan {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
