//! Chord-decomposed semiclassical Wigner functions for one degree of freedom,
//! their evolution under hermitian Lindblad channels, and an exact grid oracle
//! to check them against.

pub mod chord;
pub mod classical;
pub mod diffusion;
pub mod error;
pub mod lindblad;
pub mod normalization;
pub mod oracle;
pub mod projection;
pub mod quadrature;
pub mod special;
pub mod wigner;

pub use classical::{HamiltonianSystem, PhaseSpacePoint};
pub use error::{Error, Result};
