//! Construction and verification of quantum information maskers.
//!
//! A masker encodes states `|a_k⟩` of a system `A` into bipartite states of
//! `A ⊗ B` whose single-party marginals do not depend on `k`. This crate builds
//! deterministic maskers for orthonormal families and probabilistic
//! (post-selected) maskers for linearly independent families, optimizes the
//! success probability, and checks the masking property numerically.

pub mod cli;
pub mod error;
pub mod fixed_reducing;
pub mod hilbert;
pub mod io;
pub mod masker;
pub mod optimizer;

pub use error::{Error, Result};
