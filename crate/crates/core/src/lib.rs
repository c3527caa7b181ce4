//! Radial solutions of `−u″ − (N−1)/r·u′ + u = λe^u`: constant, singular and
//! regular solutions, their spectra, and the branches connecting them.

pub mod bifurcation;
pub mod cli;
pub mod config;
pub mod equilibria;
pub mod error;
pub mod kernel;
pub mod ode;
pub mod output;
pub mod profile;
pub mod quad;
pub mod roots;
pub mod shooting;
pub mod singular;
pub mod spectrum;

pub use error::{Error, Result};

// The guide's snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/singular.md")]
    mod singular {}
    #[doc = include_str!("../../../book/src/shooting.md")]
    mod shooting {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/bifurcation.md")]
    mod bifurcation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
