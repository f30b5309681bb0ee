//! Holonomic gates in the ultrastrong-coupling quantum Rabi model: dressed
//! spectra, two-tone driving, Λ-system holonomies, open-system fidelity and
//! two coupled Rabi systems.
//!
//! Units throughout: ħ = 1 and the cavity frequency ω_c = 1.

pub mod error;
pub mod linalg;
pub mod output;
pub mod propagate;
pub mod qrm;
pub mod drive;
pub mod holonomy;
pub mod open_system;
pub mod coupled;

pub use error::{Error, Result};
