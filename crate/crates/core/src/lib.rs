//! Interference-influence analysis of finite-dimensional unitary circuits.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`linalg`]: dense complex matrices, tensor bookkeeping, eigen and
//!   nullspace kernels, Haar sampling;
//! * [`circuit`]: gate/wire DAGs, bubble cuts and Heisenberg embedding;
//! * [`algebra`]: generated *-algebras, commutants, centres, block structure;
//! * [`influence`]: quantum and interference influences, influence graphs;
//! * [`preference`]: preferred decompositions and preferred sets of a bubble;
//! * [`histories`]: history probabilities, decoherence functional, sampling;
//! * [`scenarios`]: model builders and nonclassicality classifiers;
//! * [`fixtures`]: seeded random circuits and channels for property checks.
//!
//! Tensor factors are always ordered leftmost-most-significant: for dims
//! `(d0, d1)` the basis index of `|i⟩⊗|j⟩` is `i * d1 + j`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod circuit;
pub mod error;
pub mod fixtures;
pub mod histories;
pub mod influence;
pub mod linalg;
pub mod preference;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use linalg::{c64, ComplexMatrix, DimVector, OperatorBasis, C64};

/// Default absolute tolerance for matrix identities.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default tolerance for merging nearly degenerate eigenvalues.
pub const DEFAULT_GROUP_TOL: f64 = 1e-7;
/// Commutator max-norm above which an influence is reported.
pub const INFLUENCE_TOL: f64 = 1e-8;
/// Default cap on total Hilbert-space dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;
