//! Primitive elements with prescribed traces of the element and its inverse.
//!
//! The crate decides, for prime powers q and degrees n, whether every pair
//! (a, b) of F_q admits ξ ∈ F_{q^n} with T(ξ) = a, T(ξ⁻¹) = b and ξ + ξ⁻¹
//! primitive. It combines character-sum and sieve criteria, residue-class
//! lower bounds on q, a candidate elimination pipeline, and direct search.

pub mod charsum;
pub mod criteria;
pub mod gfarith;
pub mod hybrid;
pub mod ntheory;
pub(crate) mod serde_big;
pub mod survey;
pub mod verify;
