//! CHSH correlations for the `(2θ, 0 | θ, 3θ)` analyzer family on the
//! maximally entangled states `cos ξ |φ⁺⟩ + sin ξ |ψ⁻⟩`.
//!
//! - [`linalg`]: fixed-size complex matrices, kets and a Jacobi eigensolver.
//! - [`chsh`]: observables, coincidence probabilities, `S(θ, ξ)`, the Bell
//!   operator and its classical, spectral and Tsirelson bounds.
//! - [`expsim`]: Monte Carlo coincidence counting with a noise model.
//! - [`cli`]: CSV sweeps behind the `chsh-bounds` binary.

pub mod chsh;
pub mod cli;
pub mod error;
pub mod expsim;
pub mod linalg;
pub mod sampling;

pub use error::{Error, Result};
