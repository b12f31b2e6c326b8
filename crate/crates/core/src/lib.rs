//! Stein's method for the Beta distribution and for general first-order
//! Stein operators `η g' + γ g`.
//!
//! The crate covers the coefficient pair `(γ, η)` of a target law, standard
//! solutions of the Stein equation with their bounds, the closed-form Beta
//! specialization, the Pólya urn exchangeable pair and the experiments that
//! tie them together.

pub mod beta;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod framework;
pub mod polya;
pub mod quad;
pub mod report;
pub mod special;
pub mod supnorm;

pub use error::{Error, Result};
pub use special::BetaParams;
