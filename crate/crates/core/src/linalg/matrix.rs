use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Default)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Square matrix from real row-major entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n, "from_real: wrong entry count");
        ComplexMatrix { rows: n, cols: n, data: entries.iter().map(|&x| c64(x, 0.0)).collect() }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        ComplexMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// `|v⟩⟨v|` for a (not necessarily normalized) vector.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    /// `|k⟩⟨k|` in dimension `n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[k * n + k] = c64(1.0, 0.0);
        m
    }

    /// Matrix unit `|r⟩⟨c|`.
    pub fn unit(n: usize, r: usize, c: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[r * n + c] = c64(1.0, 0.0);
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    /// Side length of a square matrix.
    #[inline]
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }
    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[C64]) {
        for r in 0..self.rows {
            self.data[r * self.cols + c] = v[r];
        }
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |r, c| self.data[r * self.cols + start + c])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.data[c * self.cols + r].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.data[c * self.cols + r])
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c64(s, 0.0))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy: shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Matrix product; zero entries of `self` are skipped, so permutation
    /// and block-sparse factors multiply cheaply.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let n = other.cols;
        let mut out = vec![C64::new(0.0, 0.0); self.rows * n];
        for r in 0..self.rows {
            let orow = &mut out[r * n..(r + 1) * n];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { rows: self.rows, cols: n, data: out }
    }

    /// `self† · other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_mul: dimension mismatch");
        let n = other.cols;
        let mut out = vec![C64::new(0.0, 0.0); self.cols * n];
        for k in 0..self.rows {
            let brow = &other.data[k * n..(k + 1) * n];
            for r in 0..self.cols {
                let a = self.data[k * self.cols + r].conj();
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &mut out[r * n..(r + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { rows: self.cols, cols: n, data: out }
    }

    /// `self · other†`.
    pub fn mul_adjoint(&self, other: &Self) -> Self {
        self.matmul(&other.adjoint())
    }

    /// `u · self · u†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).mul_adjoint(u)
    }

    /// `u† · self · u`.
    pub fn conjugate_by_adjoint(&self, u: &Self) -> Self {
        u.adjoint_mul(&self.matmul(u))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Trace of a product `Tr(self · other)` in O(n^2).
    pub fn trace_of_product(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.cols, other.rows), "trace_of_product: shape");
        let mut acc = c64(0.0, 0.0);
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[r * self.cols + k] * other.data[k * other.cols + r];
            }
        }
        acc
    }

    /// Hilbert-Schmidt inner product `Tr(self† · other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "hs_inner: shape");
        self.data.iter().zip(&other.data).map(|(a, &b)| a.conj() * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral-norm upper bound used for scale-aware comparisons.
    pub fn norm_bound(&self) -> f64 {
        self.frobenius_norm()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// `‖self - other‖_max`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "max_diff: shape");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self.data[r * n + c] - self.data[c * n + r].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint_mul(self).max_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.adjoint_mul(self).max_diff(&Self::identity(self.cols)) <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_square()
            && self.hermitian_deviation() <= tol
            && self.matmul(self).max_diff(self) <= tol
    }

    /// Rank of a projector, read off its trace.
    pub fn projector_rank(&self) -> usize {
        libm::round(self.trace().re).max(0.0) as usize
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        (self + &adj).scale_real(0.5)
    }

    /// Row-major vectorization.
    pub fn vectorize(&self) -> &[C64] {
        &self.data
    }

    /// Rows selected and reordered by `perm`: row `k` of the result is row
    /// `perm[k]` of `self`.
    pub fn select_rows(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(perm.len() * self.cols);
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        ComplexMatrix { rows: perm.len(), cols: self.cols, data }
    }

    /// Columns selected and reordered by `perm`.
    pub fn select_cols(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.rows, perm.len(), |r, c| self.data[r * self.cols + perm[c]])
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self[(r, c)];
            }
        }
        for r in 0..other.rows {
            for c in 0..other.cols {
                m[(self.rows + r, self.cols + c)] = other[(r, c)];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_adjoint_helpers_agree() {
        let a = ComplexMatrix::from_fn(3, 2, |r, c| c64(r as f64 + 1.0, c as f64 - 0.5));
        let b = ComplexMatrix::from_fn(3, 4, |r, c| c64((r * c) as f64, 1.0));
        assert!(a.adjoint_mul(&b).max_diff(&a.adjoint().matmul(&b)) < 1e-14);
        let sq = ComplexMatrix::from_fn(3, 3, |r, c| c64(r as f64, c as f64));
        assert!((sq.trace_of_product(&sq) - sq.matmul(&sq).trace()).norm() < 1e-12);
    }

    #[test]
    fn projector_and_unitary_flags() {
        let h = ComplexMatrix::from_real(2, &[1.0, 1.0, 1.0, -1.0]).scale_real(core::f64::consts::FRAC_1_SQRT_2);
        assert!(h.is_unitary(1e-12));
        let p = ComplexMatrix::outer(&[c64(0.6, 0.0), c64(0.0, 0.8)]);
        assert!(p.is_projector(1e-12));
        assert_eq!(p.projector_rank(), 1);
        assert!(!h.is_projector(1e-6));
    }
}
