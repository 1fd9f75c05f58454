//! Non-Hermitian linear response of Lindbladian open quantum systems.
//!
//! The response kernel `χ(τ) = ⟨I|(A⊗I) e^{ℒτ} 𝒱|ρ_eq⟩` is computed three
//! ways: dense exponentiation of the Liouvillian, a Schrödingerized
//! quadrature over unitary evolutions `exp(−i(ηℋ₁ + ℋ₂)t)`, and gate-level
//! simulation of a Hadamard-test circuit per quadrature node (ideal or under
//! parametric noise).

pub mod circuit;
pub mod error;
pub mod expm;
pub mod liouville;
pub mod lindblad;
pub mod noise;
pub mod response;
pub mod schrod;
pub mod sweeps;
pub mod testing;

pub use error::{Error, Result};
