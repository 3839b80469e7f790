//! Dense complex linear algebra.

mod decompose;
mod matrix;
mod random;
mod subspace;
mod tensor;

pub use decompose::{
    herm_eig, herm_eig_projectors, nullspace, nullspace_stacked, nullspace_with_floor, qr, EigenPair,
};
pub use matrix::{c64, ComplexMatrix, C64};
pub use random::haar_unitary_with;
pub use random::{haar_random_unitary, random_hermitian, random_rank_partition};
pub use subspace::{orthonormalize, same_span, OperatorBasis};
pub(crate) use tensor::permutation_index_map;
pub use tensor::{
    apply_on_factors, embed, kron, kron_all, partial_trace, permute_factors, DimVector,
};

use core::sync::atomic::{AtomicUsize, Ordering};

static MAX_DIM: AtomicUsize = AtomicUsize::new(crate::DEFAULT_MAX_DIM);

/// Current cap on any single Hilbert-space dimension produced by the crate.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

/// Override the dimension cap (process wide).
pub fn set_max_dim(dim: usize) {
    MAX_DIM.store(dim.max(1), Ordering::Relaxed);
}

pub(crate) fn check_dim(requested: usize) -> crate::Result<()> {
    let max = max_dim();
    if requested > max {
        Err(crate::Error::DimensionOverflow { requested, max })
    } else {
        Ok(())
    }
}
