use alloc::vec::Vec;

use super::{c64, ComplexMatrix, C64};

/// Hilbert-Schmidt orthonormal list of operators of one ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn empty(dim: usize) -> Self {
        OperatorBasis { dim, elements: Vec::new() }
    }

    /// Matrix units `|r⟩⟨c|`, a basis of the full operator space.
    pub fn full(dim: usize) -> Self {
        let mut elements = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                elements.push(ComplexMatrix::unit(dim, r, c));
            }
        }
        OperatorBasis { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<ComplexMatrix> {
        self.elements
    }

    /// Orthogonal projection of `m` onto the span.
    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for e in &self.elements {
            out.axpy(e.hs_inner(m), e);
        }
        out
    }

    /// Frobenius norm of the component of `m` outside the span.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        (m - &self.project(m)).frobenius_norm()
    }

    pub fn contains(&self, m: &ComplexMatrix, tol: f64) -> bool {
        self.residual(m) <= tol * m.frobenius_norm().max(1.0)
    }

    /// Linear combination `Σ coeffs[k] · e_k`.
    pub fn combine(&self, coeffs: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (e, &c) in self.elements.iter().zip(coeffs) {
            out.axpy(c, e);
        }
        out
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let target = if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
                dev = dev.max((a.hs_inner(b) - target).norm());
            }
        }
        dev
    }

    /// Extend the basis with the components of `ops` outside the current
    /// span; returns how many elements were added.
    pub fn extend(&mut self, ops: &[ComplexMatrix], tol: f64) -> usize {
        let before = self.elements.len();
        let scale = ops.iter().map(|m| m.frobenius_norm()).fold(0.0, f64::max);
        for m in ops {
            assert_eq!((m.rows(), m.cols()), (self.dim, self.dim), "operator basis: dimension mismatch");
            let mut r = m.clone();
            // two Gram-Schmidt passes keep orthogonality at machine precision
            for _ in 0..2 {
                for e in &self.elements {
                    let k = e.hs_inner(&r);
                    r.axpy(-k, e);
                }
            }
            let n = r.frobenius_norm();
            if n > tol * scale.max(1.0) && n > 0.0 {
                self.elements.push(r.scale_real(1.0 / n));
            }
        }
        self.elements.len() - before
    }
}

/// Orthonormal basis of the span of `ops` (empty input gives an empty basis).
pub fn orthonormalize(ops: &[ComplexMatrix], tol: f64) -> OperatorBasis {
    let dim = ops.first().map(|m| m.rows()).unwrap_or(0);
    let mut basis = OperatorBasis::empty(dim);
    basis.extend(ops, tol);
    basis
}

/// Subspace equality through principal angles: equal size and every basis
/// element of each lies in the other's span within `angle_tol`.
pub fn same_span(a: &OperatorBasis, b: &OperatorBasis, angle_tol: f64) -> bool {
    a.len() == b.len()
        && a.elements().iter().all(|m| b.residual(m) <= angle_tol)
        && b.elements().iter().all(|m| a.residual(m) <= angle_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paulis() -> [ComplexMatrix; 4] {
        [
            ComplexMatrix::identity(2),
            ComplexMatrix::from_real(2, &[0., 1., 1., 0.]),
            ComplexMatrix::from_vec(2, 2, alloc::vec![c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)]).unwrap(),
            ComplexMatrix::from_real(2, &[1., 0., 0., -1.]),
        ]
    }

    #[test]
    fn orthonormalize_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(orthonormalize(&[i2.clone(), i2.scale_real(2.0)], 1e-9).len(), 1);
        let b = orthonormalize(&paulis(), 1e-9);
        assert_eq!(b.len(), 4);
        assert!(b.gram_deviation() < 1e-14);
        let p0 = ComplexMatrix::basis_projector(2, 0);
        let p1 = ComplexMatrix::basis_projector(2, 1);
        assert_eq!(orthonormalize(&[p0, p1, i2], 1e-9).len(), 2);
        assert!(orthonormalize(&[], 1e-9).is_empty());
    }
}
