//! Lorentzian spectral zeta densities: metric jets and curvature, Hadamard
//! transport coefficients, Minkowski model integrals, the parametrix zeta
//! density with its residues, and mode-sum oracles on explicit spacetimes.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod hadamard;
pub mod jet;
pub mod minkmodel;
pub mod quad;
pub mod special;
pub mod specoracle;
pub mod zeta;

pub use error::{Error, Result};

// Runs the code blocks of the guide under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/hadamard.md")]
    mod hadamard {}
    #[doc = include_str!("../../../book/src/model-integrals.md")]
    mod model_integrals {}
    #[doc = include_str!("../../../book/src/zeta-density.md")]
    mod zeta_density {}
    #[doc = include_str!("../../../book/src/mode-sums.md")]
    mod mode_sums {}
    #[doc = include_str!("../../../book/src/spectral-action.md")]
    mod spectral_action {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
