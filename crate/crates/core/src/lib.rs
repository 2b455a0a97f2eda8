pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod increments;
pub mod lattice;
pub mod limits;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/increments.md")]
    mod increments {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/exact-engine.md")]
    mod exact_engine {}
    #[doc = include_str!("../../../book/src/limit-densities.md")]
    mod limit_densities {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
