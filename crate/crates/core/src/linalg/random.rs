use alloc::vec::Vec;

use super::{c64, qr, ComplexMatrix};
use crate::rng::Rng;

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal folded into `Q`.
pub fn haar_random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    haar_unitary_with(dim, &mut Rng::new(seed))
}

pub fn haar_unitary_with(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(dim >= 1, "haar_random_unitary: dim must be positive");
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
    let (mut q, r) = qr(&g);
    for c in 0..dim {
        let d = r[(c, c)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= ph;
        }
    }
    q
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(n: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal()).hermitian_part()
}

/// Random projective decomposition of `C^dim` into `parts` nonzero blocks,
/// spanned by the columns of a Haar unitary.
pub fn random_rank_partition(dim: usize, parts: usize, rng: &mut Rng) -> Vec<ComplexMatrix> {
    let parts = parts.clamp(1, dim);
    let u = haar_unitary_with(dim, rng);
    // each part gets one column, the rest are assigned at random
    let mut owner: Vec<usize> = (0..dim).map(|k| if k < parts { k } else { rng.below(parts) }).collect();
    for i in (1..dim).rev() {
        let j = rng.below(i + 1);
        owner.swap(i, j);
    }
    let mut out: Vec<ComplexMatrix> = (0..parts).map(|_| ComplexMatrix::zeros(dim, dim)).collect();
    for (k, &o) in owner.iter().enumerate() {
        out[o].axpy(c64(1.0, 0.0), &ComplexMatrix::outer(&u.col(k)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let u = haar_random_unitary(4, 11);
        assert!(u.is_unitary(1e-12));
        assert_eq!(u, haar_random_unitary(4, 11));
        assert_ne!(u, haar_random_unitary(4, 12));
        let s = haar_random_unitary(1, 5);
        assert!((s[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partitions_are_complete() {
        let mut rng = Rng::new(1);
        let parts = random_rank_partition(5, 3, &mut rng);
        let mut sum = ComplexMatrix::zeros(5, 5);
        for p in &parts {
            assert!(p.is_projector(1e-12));
            assert!(p.projector_rank() >= 1);
            sum = &sum + p;
        }
        assert!(sum.max_diff(&ComplexMatrix::identity(5)) < 1e-12);
    }
}
