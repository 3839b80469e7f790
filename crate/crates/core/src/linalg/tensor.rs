use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_dim, c64, ComplexMatrix};
use crate::{Error, Result};

/// Ordered tensor-factor dimensions, leftmost most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct DimVector(pub Vec<usize>);

impl DimVector {
    pub fn new(dims: Vec<usize>) -> Self {
        DimVector(dims)
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Stride of each factor in the flat index.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.0[k + 1];
        }
        s
    }

    /// Product of the dimensions at `positions`.
    pub fn sub_total(&self, positions: &[usize]) -> usize {
        positions.iter().map(|&p| self.0[p]).product()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.0.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(format!("zero factor in {:?}", self.0)));
        }
        if self.total() != n {
            return Err(Error::DimensionMismatch(format!(
                "factors {:?} do not multiply to {n}",
                self.0
            )));
        }
        Ok(())
    }

    fn check_positions(&self, positions: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.0.len()];
        for &p in positions {
            if p >= self.0.len() || seen[p] {
                return Err(Error::DimensionMismatch(format!(
                    "factor positions {positions:?} invalid for {} factors",
                    self.0.len()
                )));
            }
            seen[p] = true;
        }
        Ok(())
    }

    /// For every flat index, the split into (index over `positions` in the
    /// given order, index over the remaining factors in natural order).
    fn split_table(&self, positions: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
        let strides = self.strides();
        let rest: Vec<usize> = (0..self.0.len()).filter(|k| !positions.contains(k)).collect();
        let d_sel = self.sub_total(positions);
        let d_rest = self.sub_total(&rest);
        let total = self.total();
        let mut sel_idx = vec![0; total];
        let mut rest_idx = vec![0; total];
        for i in 0..total {
            let digit = |k: usize| (i / strides[k]) % self.0[k];
            let mut s = 0;
            for &p in positions {
                s = s * self.0[p] + digit(p);
            }
            let mut r = 0;
            for &p in &rest {
                r = r * self.0[p] + digit(p);
            }
            sel_idx[i] = s;
            rest_idx[i] = r;
        }
        (sel_idx, rest_idx, d_sel, d_rest)
    }
}

impl From<Vec<usize>> for DimVector {
    fn from(v: Vec<usize>) -> Self {
        DimVector(v)
    }
}

impl From<&[usize]> for DimVector {
    fn from(v: &[usize]) -> Self {
        DimVector(v.to_vec())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows());
    let cols = a.cols().checked_mul(b.cols());
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::DimensionOverflow { requested: usize::MAX, max: super::max_dim() }),
    };
    check_dim(rows.max(cols))?;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let x = a[(ar, ac)];
            if x == c64(0.0, 0.0) {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    Ok(out)
}

/// Left-to-right Kronecker product of a list (empty list gives `[1]`).
pub fn kron_all(ms: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(1);
    for m in ms {
        acc = kron(&acc, m)?;
    }
    Ok(acc)
}

/// Partial trace keeping the factors in `keep` (result in ascending factor
/// order).
pub fn partial_trace(m: &ComplexMatrix, dims: &DimVector, keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("partial trace of a non-square matrix".into()));
    }
    dims.validate(m.rows())?;
    dims.check_positions(keep)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    let (sel, rest, d_keep, d_rest) = dims.split_table(&keep_sorted);
    let mut index = vec![0usize; d_keep * d_rest];
    for i in 0..m.rows() {
        index[sel[i] * d_rest + rest[i]] = i;
    }
    let mut out = ComplexMatrix::zeros(d_keep, d_keep);
    for a in 0..d_keep {
        for b in 0..d_keep {
            let mut acc = c64(0.0, 0.0);
            for t in 0..d_rest {
                acc += m[(index[a * d_rest + t], index[b * d_rest + t])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reorder tensor factors of a square operator: factor `k` of the result is
/// factor `perm[k]` of the input.
pub fn permute_factors(m: &ComplexMatrix, dims: &DimVector, perm: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("factor permutation of a non-square matrix".into()));
    }
    dims.validate(m.rows())?;
    if perm.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!("permutation {perm:?} for {} factors", dims.len())));
    }
    dims.check_positions(perm)?;
    let map = permutation_index_map(dims, perm);
    Ok(ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(map[r], map[c])]))
}

/// `map[new_index] = old_index` for the factor reordering `perm`.
pub(crate) fn permutation_index_map(dims: &DimVector, perm: &[usize]) -> Vec<usize> {
    let (sel, _, _, _) = dims.split_table(perm);
    let mut map = vec![0; sel.len()];
    for (old, &new) in sel.iter().enumerate() {
        map[new] = old;
    }
    map
}

/// Left-multiply `m` (rows indexed by `dims`) by `op` acting on the factors
/// at `positions`, in that order.
pub fn apply_on_factors(
    m: &ComplexMatrix,
    dims: &DimVector,
    positions: &[usize],
    op: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    dims.validate(m.rows())?;
    dims.check_positions(positions)?;
    let d_sel = dims.sub_total(positions);
    if op.rows() != d_sel || op.cols() != d_sel {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {}x{} on factors of total dim {d_sel}",
            op.rows(),
            op.cols()
        )));
    }
    let (sel, rest, _, d_rest) = dims.split_table(positions);
    let mut index = vec![0usize; d_sel * d_rest];
    for i in 0..m.rows() {
        index[sel[i] * d_rest + rest[i]] = i;
    }
    let cols = m.cols();
    let mut out = ComplexMatrix::zeros(m.rows(), cols);
    let src = m.data();
    let dst = out.data_mut();
    for r in 0..d_rest {
        for tp in 0..d_sel {
            let orow = index[tp * d_rest + r];
            for t in 0..d_sel {
                let g = op[(tp, t)];
                if g.re == 0.0 && g.im == 0.0 {
                    continue;
                }
                let irow = index[t * d_rest + r];
                let s = &src[irow * cols..(irow + 1) * cols];
                let o = &mut dst[orow * cols..(orow + 1) * cols];
                for (x, &y) in o.iter_mut().zip(s) {
                    *x += g * y;
                }
            }
        }
    }
    Ok(out)
}

/// `op` placed on the factors at `positions`, identity elsewhere.
pub fn embed(op: &ComplexMatrix, dims: &DimVector, positions: &[usize]) -> Result<ComplexMatrix> {
    check_dim(dims.total())?;
    apply_on_factors(&ComplexMatrix::identity(dims.total()), dims, positions, op)
}
