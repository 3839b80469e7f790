use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::basis::random_hermitian_element;
use super::AlgebraBasis;
use crate::linalg::{herm_eig_projectors, ComplexMatrix, C64};
use crate::rng::Rng;
use crate::{Error, Result};

const ATTEMPTS: u64 = 8;
const ENTRY_EPS: f64 = 1e-9;

/// Complete family of mutually orthogonal projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjDecomp {
    projectors: Vec<ComplexMatrix>,
}

impl ProjDecomp {
    /// Validated constructor.
    pub fn new(projectors: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let d = ProjDecomp { projectors };
        d.validate(tol)?;
        Ok(d)
    }

    /// No validation; for constructions that are exact by design.
    pub fn from_projectors_unchecked(projectors: Vec<ComplexMatrix>) -> Self {
        ProjDecomp { projectors }
    }

    /// `{I}`.
    pub fn trivial(dim: usize) -> Self {
        ProjDecomp { projectors: alloc::vec![ComplexMatrix::identity(dim)] }
    }

    /// `{|k⟩⟨k|}`.
    pub fn computational(dim: usize) -> Self {
        ProjDecomp { projectors: (0..dim).map(|k| ComplexMatrix::basis_projector(dim, k)).collect() }
    }

    /// Rank-1 projectors onto the columns of a unitary.
    pub fn from_unitary_columns(u: &ComplexMatrix) -> Self {
        ProjDecomp { projectors: (0..u.cols()).map(|k| ComplexMatrix::outer(&u.col(k))).collect() }
    }

    /// Rank-1 projectors onto the given orthonormal vectors, plus the
    /// projector onto their orthogonal complement if it is nonzero.
    pub fn from_vectors(vectors: &[Vec<C64>], tol: f64) -> Result<Self> {
        let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
        let mut projectors: Vec<ComplexMatrix> = vectors.iter().map(|v| ComplexMatrix::outer(v)).collect();
        let mut rest = ComplexMatrix::identity(dim);
        for p in &projectors {
            rest = &rest - p;
        }
        if rest.trace().re > 0.5 {
            projectors.push(rest);
        }
        Self::new(projectors, tol)
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn into_projectors(self) -> Vec<ComplexMatrix> {
        self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// Dimension of the space decomposed.
    pub fn dim(&self) -> usize {
        self.projectors.first().map(|p| p.rows()).unwrap_or(0)
    }

    pub fn is_trivial(&self) -> bool {
        self.projectors.len() == 1
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let Some(first) = self.projectors.first() else {
            return Err(Error::InvalidDecomposition("no projectors".into()));
        };
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (i, p) in self.projectors.iter().enumerate() {
            if p.rows() != d || p.cols() != d {
                return Err(Error::InvalidDecomposition(format!("projector {i} has the wrong size")));
            }
            if !p.is_projector(tol) {
                return Err(Error::InvalidDecomposition(format!("element {i} is not a projector")));
            }
            if p.max_abs() <= tol {
                return Err(Error::InvalidDecomposition(format!("projector {i} is zero")));
            }
            for (j, q) in self.projectors.iter().enumerate().skip(i + 1) {
                if p.matmul(q).max_abs() > tol {
                    return Err(Error::InvalidDecomposition(format!("projectors {i} and {j} overlap")));
                }
            }
            sum = &sum + p;
        }
        if sum.max_diff(&ComplexMatrix::identity(d)) > tol {
            return Err(Error::InvalidDecomposition("projectors do not sum to the identity".into()));
        }
        Ok(())
    }

    /// Sort into the canonical order (see [`canonical_order`]).
    pub fn canonicalized(mut self) -> Self {
        canonical_order(&mut self.projectors);
        self
    }

    /// Distance between two decompositions as unordered sets: pair the
    /// projectors greedily by largest Hilbert-Schmidt overlap and take the
    /// largest entrywise difference. Infinite when the sizes differ.
    pub fn distance(&self, other: &ProjDecomp) -> f64 {
        if self.len() != other.len() || self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let n = self.len();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
        for (i, p) in self.projectors.iter().enumerate() {
            for (j, q) in other.projectors.iter().enumerate() {
                pairs.push((p.hs_inner(q).re, i, j));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_a = alloc::vec![false; n];
        let mut used_b = alloc::vec![false; n];
        let mut worst: f64 = 0.0;
        for (_, i, j) in pairs {
            if used_a[i] || used_b[j] {
                continue;
            }
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(self.projectors[i].max_diff(&other.projectors[j]));
        }
        worst
    }

    /// Merge projectors: `groups[k]` lists the members of the k-th coarse
    /// projector.
    pub fn coarse_grain(&self, groups: &[Vec<usize>]) -> Result<ProjDecomp> {
        let d = self.dim();
        let mut out = Vec::with_capacity(groups.len());
        let mut seen = alloc::vec![false; self.len()];
        for g in groups {
            let mut p = ComplexMatrix::zeros(d, d);
            for &i in g {
                if i >= self.len() || seen[i] {
                    return Err(Error::InvalidArgument("coarse-graining groups must partition the projectors".into()));
                }
                seen[i] = true;
                p = &p + &self.projectors[i];
            }
            out.push(p);
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("coarse-graining groups must partition the projectors".into()));
        }
        Ok(ProjDecomp { projectors: out })
    }
}

fn first_nonzero(p: &ComplexMatrix) -> (usize, f64) {
    p.data()
        .iter()
        .enumerate()
        .find(|(_, z)| z.norm() > ENTRY_EPS)
        .map(|(k, z)| (k, z.re))
        .unwrap_or((usize::MAX, 0.0))
}

fn cmp_desc(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= ENTRY_EPS {
        Ordering::Equal
    } else {
        b.total_cmp(&a)
    }
}

/// Canonical projector order: descending rank, then descending real part of
/// the first nonzero entry in row-major order; remaining ties are broken by
/// the position of that entry and then by comparing all entries (real parts,
/// then imaginary parts, descending).
pub fn canonical_order(projectors: &mut [ComplexMatrix]) {
    projectors.sort_by(|p, q| {
        let (ip, vp) = first_nonzero(p);
        let (iq, vq) = first_nonzero(q);
        q.projector_rank()
            .cmp(&p.projector_rank())
            .then(cmp_desc(vp, vq))
            .then(ip.cmp(&iq))
            .then_with(|| {
                for (a, b) in p.data().iter().zip(q.data()) {
                    let o = cmp_desc(a.re, b.re).then(cmp_desc(a.im, b.im));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            })
    });
}

/// The minimal projectors spanning a commutative algebra, in canonical
/// order. A random Hermitian element is diagonalized and its eigenspaces
/// grouped; attempts whose spectrum is accidentally degenerate are retried.
pub fn central_decomposition(a: &AlgebraBasis, tol: f64, seed: u64) -> Result<ProjDecomp> {
    let defect = a.commutativity_defect();
    if defect > tol.max(1e-9) * 10.0 {
        return Err(Error::NotCommutative(defect));
    }
    let k = a.len();
    for attempt in 0..ATTEMPTS {
        let mut rng = Rng::derived(seed, 0x0ce0_0000 + attempt);
        let h = random_hermitian_element(a.basis(), &mut rng);
        let groups = herm_eig_projectors(&h, crate::DEFAULT_GROUP_TOL)?;
        if groups.len() < k {
            continue;
        }
        if groups.len() > k {
            return Err(Error::NumericDefect(format!(
                "element of a {k}-dimensional commutative algebra has {} distinct eigenvalues",
                groups.len()
            )));
        }
        let mut projectors: Vec<ComplexMatrix> = groups.into_iter().map(|(_, p)| p).collect();
        if projectors.iter().any(|p| !a.contains(p, 1e-7)) {
            continue;
        }
        canonical_order(&mut projectors);
        return Ok(ProjDecomp { projectors });
    }
    Err(Error::NumericDefect(format!("no generic element found after {ATTEMPTS} attempts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{generate_algebra, AlgebraBasis};
    use crate::linalg::{c64, kron};

    #[test]
    fn trivial_span_gives_identity() {
        let d = central_decomposition(&AlgebraBasis::scalars(4), 1e-9, 0).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.projectors()[0].max_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn diagonal_algebra_gives_computational_basis() {
        let gens: Vec<ComplexMatrix> = (0..3).map(|k| ComplexMatrix::basis_projector(3, k)).collect();
        let a = generate_algebra(&gens, 1e-9).unwrap();
        let d = central_decomposition(&a, 1e-9, 5).unwrap();
        assert!(d.distance(&ProjDecomp::computational(3)) < 1e-10);
        // canonical order puts |0⟩ first
        assert!(d.projectors()[0].max_diff(&ComplexMatrix::basis_projector(3, 0)) < 1e-10);
    }

    #[test]
    fn z_tensor_identity() {
        let z = ComplexMatrix::from_real(2, &[1., 0., 0., -1.]);
        let zi = kron(&z, &ComplexMatrix::identity(2)).unwrap();
        let a = generate_algebra(&[zi], 1e-9).unwrap();
        let d = central_decomposition(&a, 1e-9, 1).unwrap();
        let p0 = kron(&ComplexMatrix::basis_projector(2, 0), &ComplexMatrix::identity(2)).unwrap();
        let p1 = kron(&ComplexMatrix::basis_projector(2, 1), &ComplexMatrix::identity(2)).unwrap();
        let expected = ProjDecomp::new(alloc::vec![p0, p1], 1e-12).unwrap();
        assert!(d.distance(&expected) < 1e-10);
    }

    #[test]
    fn rejects_noncommutative() {
        let x = ComplexMatrix::from_real(2, &[0., 1., 1., 0.]);
        let z = ComplexMatrix::from_real(2, &[1., 0., 0., -1.]);
        let a = generate_algebra(&[x, z], 1e-9).unwrap();
        assert!(matches!(central_decomposition(&a, 1e-9, 0), Err(Error::NotCommutative(_))));
    }

    #[test]
    fn canonical_order_examples() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix::outer(&[c64(h, 0.), c64(h, 0.)]);
        let minus = ComplexMatrix::outer(&[c64(h, 0.), c64(-h, 0.)]);
        let mut v = alloc::vec![minus.clone(), plus.clone()];
        canonical_order(&mut v);
        assert_eq!(v[0], plus);
        let mut z = alloc::vec![ComplexMatrix::basis_projector(2, 1), ComplexMatrix::basis_projector(2, 0)];
        canonical_order(&mut z);
        assert_eq!(z[0], ComplexMatrix::basis_projector(2, 0));
    }
}
