use alloc::vec::Vec;

use crate::linalg::{c64, nullspace_stacked, orthonormalize, ComplexMatrix, OperatorBasis, C64};
use crate::{Error, Result};

/// Orthonormal basis of a *-closed operator subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraBasis {
    basis: OperatorBasis,
    contains_identity: bool,
}

impl AlgebraBasis {
    /// Wrap a basis, detecting whether the identity lies in its span.
    pub fn from_basis(basis: OperatorBasis, tol: f64) -> Self {
        let id = ComplexMatrix::identity(basis.dim());
        let contains_identity = basis.contains(&id, tol.max(1e-9));
        AlgebraBasis { basis, contains_identity }
    }

    /// `span{I}` on dimension `dim`.
    pub fn scalars(dim: usize) -> Self {
        Self::from_basis(orthonormalize(&[ComplexMatrix::identity(dim)], 1e-12), 1e-12)
    }

    /// The full matrix algebra on dimension `dim`.
    pub fn full(dim: usize) -> Self {
        AlgebraBasis { basis: OperatorBasis::full(dim), contains_identity: true }
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }
    pub fn elements(&self) -> &[ComplexMatrix] {
        self.basis.elements()
    }
    pub fn len(&self) -> usize {
        self.basis.len()
    }
    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    pub fn contains(&self, m: &ComplexMatrix, tol: f64) -> bool {
        self.basis.contains(m, tol)
    }

    /// Largest residual of products and adjoints of basis elements outside
    /// the span.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in self.elements() {
            worst = worst.max(self.basis.residual(&x.adjoint()));
            for y in self.elements() {
                worst = worst.max(self.basis.residual(&x.matmul(y)));
            }
        }
        worst
    }

    /// Largest commutator max-norm between basis elements.
    pub fn commutativity_defect(&self) -> f64 {
        let els = self.elements();
        let mut worst: f64 = 0.0;
        for i in 0..els.len() {
            for j in i + 1..els.len() {
                worst = worst.max(els[i].commutator(&els[j]).max_abs());
            }
        }
        worst
    }
}

/// Smallest unital *-algebra containing the generators.
pub fn generate_algebra(generators: &[ComplexMatrix], tol: f64) -> Result<AlgebraBasis> {
    let dim = generators
        .first()
        .map(|g| g.rows())
        .ok_or_else(|| Error::InvalidArgument("generate_algebra needs at least one generator".into()))?;
    generate_algebra_in(dim, generators, tol)
}

/// [`generate_algebra`] with an explicit ambient dimension, so an empty
/// generator list yields `span{I}`.
pub fn generate_algebra_in(dim: usize, generators: &[ComplexMatrix], tol: f64) -> Result<AlgebraBasis> {
    let mut seeds = Vec::with_capacity(2 * generators.len() + 1);
    seeds.push(ComplexMatrix::identity(dim));
    for g in generators {
        if g.rows() != dim || g.cols() != dim {
            return Err(Error::DimensionMismatch("generators must share one square dimension".into()));
        }
        seeds.push(g.clone());
        seeds.push(g.adjoint());
    }
    let mut basis = OperatorBasis::empty(dim);
    basis.extend(&seeds, tol);
    let mut fresh_from = 0;
    let cap = dim * dim;
    for _ in 0..=cap {
        let len = basis.len();
        if fresh_from == len {
            return Ok(AlgebraBasis { basis, contains_identity: true });
        }
        let mut candidates = Vec::new();
        let els = basis.elements();
        for i in 0..len {
            for j in 0..len {
                if i >= fresh_from || j >= fresh_from {
                    candidates.push(els[i].matmul(&els[j]));
                }
            }
        }
        for k in fresh_from..len {
            candidates.push(els[k].adjoint());
        }
        fresh_from = len;
        basis.extend(&candidates, tol);
    }
    Err(Error::NumericDefect("algebra closure did not stabilize".into()))
}

/// `vec(G X - X G)` as a matrix acting on row-major `vec(X)`.
fn commutation_map(g: &ComplexMatrix) -> ComplexMatrix {
    let d = g.rows();
    let n = d * d;
    let mut m = ComplexMatrix::zeros(n, n);
    // (G X)_{rc} = Σ_k G_{rk} X_{kc};  (X G)_{rc} = Σ_k X_{rk} G_{kc}
    for r in 0..d {
        for c in 0..d {
            let row = r * d + c;
            for k in 0..d {
                m[(row, k * d + c)] += g[(r, k)];
                m[(row, r * d + k)] -= g[(k, c)];
            }
        }
    }
    m
}

fn to_matrix(d: usize, v: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_vec(d, d, v.to_vec()).expect("square vectorization")
}

/// Operators commuting with every element of `a`.
pub fn commutant(a: &AlgebraBasis, tol: f64) -> AlgebraBasis {
    commutant_of(a.dim(), a.elements(), tol)
}

/// Operators commuting with every matrix in `ops`.
pub fn commutant_of(dim: usize, ops: &[ComplexMatrix], tol: f64) -> AlgebraBasis {
    let scale = ops.iter().map(|m| m.frobenius_norm()).fold(0.0, f64::max);
    let null = nullspace_stacked(ops.iter().map(commutation_map), dim * dim, tol, scale);
    let mats: Vec<ComplexMatrix> = null.iter().map(|v| to_matrix(dim, v)).collect();
    AlgebraBasis { basis: orthonormalize(&mats, tol), contains_identity: true }
}

/// Elements of `span` commuting with every matrix in `ops`.
pub fn commuting_part(span: &OperatorBasis, ops: &[ComplexMatrix], tol: f64) -> OperatorBasis {
    let k = span.len();
    if k == 0 {
        return OperatorBasis::empty(span.dim());
    }
    let scale = ops.iter().map(|m| m.frobenius_norm()).fold(0.0, f64::max);
    let els = span.elements();
    let blocks = ops.iter().map(|g| {
        let d = g.rows();
        let mut block = ComplexMatrix::zeros(d * d, k);
        for (i, e) in els.iter().enumerate() {
            block.set_col(i, e.commutator(g).data());
        }
        block
    });
    let null = nullspace_stacked(blocks, k, tol, scale);
    let mats: Vec<ComplexMatrix> = null.iter().map(|x| span.combine(x)).collect();
    orthonormalize(&mats, tol)
}

/// Intersection of two operator subspaces.
pub fn intersect(a: &AlgebraBasis, b: &AlgebraBasis, tol: f64) -> AlgebraBasis {
    let basis = intersect_spans(a.basis(), b.basis(), tol);
    AlgebraBasis::from_basis(basis, tol)
}

/// Vectors `Σ x_i a_i` whose component outside `span(b)` vanishes.
pub fn intersect_spans(a: &OperatorBasis, b: &OperatorBasis, tol: f64) -> OperatorBasis {
    let k = a.len();
    if k == 0 || b.is_empty() {
        return OperatorBasis::empty(a.dim());
    }
    let d = a.dim();
    let mut m = ComplexMatrix::zeros(d * d, k);
    for (i, e) in a.elements().iter().enumerate() {
        let r = e - &b.project(e);
        m.set_col(i, r.data());
    }
    let null = nullspace_stacked([m], k, tol, 1.0);
    let mats: Vec<ComplexMatrix> = null.iter().map(|x| a.combine(x)).collect();
    orthonormalize(&mats, tol)
}

/// Centre `comm(a) ∩ a`, computed as the part of `a` commuting with `a`.
pub fn center(a: &AlgebraBasis, tol: f64) -> AlgebraBasis {
    let basis = commuting_part(a.basis(), a.elements(), tol);
    AlgebraBasis::from_basis(basis, tol)
}

/// Random element `Σ c_k e_k` with complex Gaussian coefficients.
pub(crate) fn random_element(span: &OperatorBasis, rng: &mut crate::rng::Rng) -> ComplexMatrix {
    let coeffs: Vec<C64> = (0..span.len()).map(|_| rng.complex_normal()).collect();
    span.combine(&coeffs)
}

/// Random Hermitian element of a *-closed span.
pub(crate) fn random_hermitian_element(span: &OperatorBasis, rng: &mut crate::rng::Rng) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(span.dim(), span.dim());
    for e in span.elements() {
        let re = e.hermitian_part();
        let im = e.scale(c64(0.0, -1.0)).hermitian_part();
        h.axpy(c64(rng.normal(), 0.0), &re);
        h.axpy(c64(rng.normal(), 0.0), &im);
    }
    h.hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::same_span;

    fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0., 1., 1., 0.])
    }
    fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[1., 0., 0., -1.])
    }

    #[test]
    fn generate_examples() {
        assert_eq!(generate_algebra(&[ComplexMatrix::identity(2)], 1e-9).unwrap().len(), 1);
        assert_eq!(generate_algebra(&[x()], 1e-9).unwrap().len(), 2);
        let full = generate_algebra(&[x(), z()], 1e-9).unwrap();
        assert_eq!(full.len(), 4);
        assert!(full.closure_defect() < 1e-12);
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant(&AlgebraBasis::full(3), 1e-9).len(), 1);
        assert_eq!(commutant(&AlgebraBasis::scalars(3), 1e-9).len(), 9);
        let diag = generate_algebra(&[z()], 1e-9).unwrap();
        let c = commutant(&diag, 1e-9);
        assert!(same_span(c.basis(), diag.basis(), 1e-7));
    }

    #[test]
    fn intersect_examples() {
        let diag = generate_algebra(&[z()], 1e-9).unwrap();
        let xs = generate_algebra(&[x()], 1e-9).unwrap();
        let i = intersect(&diag, &xs, 1e-9);
        assert_eq!(i.len(), 1);
        assert!(i.contains(&ComplexMatrix::identity(2), 1e-9));
        assert!(same_span(intersect(&diag, &diag, 1e-9).basis(), diag.basis(), 1e-7));
        assert_eq!(intersect(&AlgebraBasis::full(2), &AlgebraBasis::scalars(2), 1e-9).len(), 1);
    }

    #[test]
    fn center_examples() {
        assert_eq!(center(&AlgebraBasis::full(3), 1e-9).len(), 1);
        let diag = generate_algebra(&[z()], 1e-9).unwrap();
        assert_eq!(center(&diag, 1e-9).len(), 2);
        // M2 ⊕ M2 on C^4
        let e = |m: &ComplexMatrix| m.direct_sum(&ComplexMatrix::zeros(2, 2));
        let f = |m: &ComplexMatrix| ComplexMatrix::zeros(2, 2).direct_sum(m);
        let a = generate_algebra(&[e(&x()), e(&z()), f(&x()), f(&z())], 1e-9).unwrap();
        assert_eq!(a.len(), 8);
        let c = center(&a, 1e-9);
        assert_eq!(c.len(), 2);
        assert!(c.contains(&e(&ComplexMatrix::identity(2)), 1e-9));
        let via_commutant = intersect(&a, &commutant(&a, 1e-9), 1e-9);
        assert!(same_span(c.basis(), via_commutant.basis(), 1e-7));
    }
}
