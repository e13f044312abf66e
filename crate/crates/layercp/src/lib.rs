//! Casimir-Polder energy shifts of an atom in front of a dielectric layer
//! (index `n_l`, thickness `L`) on a dielectric substrate (index `n_s`).
//!
//! Units: hbar = c = eps0 = 1.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod fresnel;
pub mod greens;
pub mod modes;
pub mod numerics;
pub mod shift;
pub mod types;

pub use error::{Error, Result};
pub use numerics::QuadratureConfig;
pub use types::{EvaluationPoint, Polarization, ShiftResult, Stack, Transition};
