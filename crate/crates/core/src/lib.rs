//! Exact computation of oriented Borel-Moore homology groups of toric
//! varieties from their fans.
//!
//! The engine works for any truncated formal-group-law theory: Chow groups
//! (additive law), K-theory (multiplicative law) and algebraic cobordism
//! (the universal law over a degree-truncated Lazard ring). All arithmetic
//! is exact over arbitrary-precision integers.
//!
//! Pipeline: [`fan`] parses and manipulates fans (face closure, smoothness,
//! star subdivisions, toric resolution); [`ring`] provides the coefficient
//! rings and formal-group-law arithmetic; [`calculus`] computes
//! Stanley-Reisner rings, intersection products and module presentations
//! for smooth fans; [`descent`] extends presentations to singular fans via
//! a resolution; [`duality`] covers Künneth tensor comparisons and the
//! Kronecker-dual module.

pub mod calculus;
pub mod descent;
pub mod duality;
pub mod error;
pub mod fan;
pub mod matrix;
pub mod report;
pub mod ring;

pub use error::{Error, Result};
