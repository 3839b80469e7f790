//! Finite-dimensional *-algebras: generated algebras, commutants, centres,
//! the block (Wedderburn) structure, and the projective decomposition that
//! spans a commutative algebra.
mod basis;
mod blocks;
mod decomp;

pub use basis::{
    center, commutant, commutant_of, commuting_part, generate_algebra, generate_algebra_in,
    intersect, intersect_spans, AlgebraBasis,
};
pub use blocks::{block_structure, Block, BlockStructure};
pub use decomp::{canonical_order, central_decomposition, ProjDecomp};
