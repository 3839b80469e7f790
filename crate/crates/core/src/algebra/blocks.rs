use alloc::format;
use alloc::vec::Vec;

use super::basis::{center, random_element, random_hermitian_element, AlgebraBasis};
use super::decomp::central_decomposition;
use crate::linalg::{c64, herm_eig, kron, orthonormalize, partial_trace, ComplexMatrix, DimVector, C64};
use crate::rng::Rng;
use crate::{Error, Result};

/// One summand `H_L ⊗ H_R` of the ambient space.
#[derive(Clone, Debug)]
pub struct Block {
    pub left_dim: usize,
    pub right_dim: usize,
    /// Isometry `H_L ⊗ H_R → H` (columns indexed left-most-significant).
    pub isometry: ComplexMatrix,
}

/// `H = ⊕_i H_L^i ⊗ H_R^i` with the algebra acting as `M_L ⊗ I_R` on each
/// summand.
#[derive(Clone, Debug)]
pub struct BlockStructure {
    pub blocks: Vec<Block>,
}

impl BlockStructure {
    /// `Σ_i l_i²`, the dimension of the algebra.
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.left_dim * b.left_dim).sum()
    }

    /// `Σ_i r_i²`, the dimension of the commutant.
    pub fn commutant_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.right_dim * b.right_dim).sum()
    }

    /// The left-factor part `M_L^i` of `m` in each block, and the largest
    /// deviation of `W_i† m W_i` from `M_L^i ⊗ I` together with the weight
    /// of `m` outside the block-diagonal.
    pub fn decompose(&self, m: &ComplexMatrix) -> (Vec<ComplexMatrix>, f64) {
        let mut parts = Vec::with_capacity(self.blocks.len());
        let mut worst: f64 = 0.0;
        let mut rebuilt = ComplexMatrix::zeros(m.rows(), m.cols());
        for b in &self.blocks {
            let local = m.conjugate_by_adjoint(&b.isometry);
            let dims = DimVector(alloc::vec![b.left_dim, b.right_dim]);
            let left = partial_trace(&local, &dims, &[0]).expect("block dims").scale_real(1.0 / b.right_dim as f64);
            let form = kron(&left, &ComplexMatrix::identity(b.right_dim)).expect("block dims");
            worst = worst.max(local.max_diff(&form));
            rebuilt = &rebuilt + &form.conjugate_by(&b.isometry);
            parts.push(left);
        }
        (parts, worst.max(rebuilt.max_diff(m)))
    }
}

const ATTEMPTS: u64 = 8;

/// Wedderburn decomposition of a unital *-algebra: central projectors give
/// the blocks, and inside each block a generic Hermitian element splits off
/// the left factor, whose matrix units are then recovered from the algebra.
pub fn block_structure(a: &AlgebraBasis, tol: f64, seed: u64) -> Result<BlockStructure> {
    let d = a.dim();
    if !a.contains(&ComplexMatrix::identity(d), 1e-7) {
        return Err(Error::InvalidArgument("block structure needs a unital algebra".into()));
    }
    let closure = a.closure_defect();
    if closure > 1e-7 {
        return Err(Error::InvalidArgument(format!("not an algebra (closure defect {closure:e})")));
    }
    let centre = central_decomposition(&center(a, tol), tol, seed)?;
    let mut blocks = Vec::with_capacity(centre.len());
    for (bi, c) in centre.projectors().iter().enumerate() {
        let range: Vec<Vec<C64>> =
            herm_eig(c, 1e-9)?.into_iter().filter(|p| p.value > 0.5).map(|p| p.vector).collect();
        let n = range.len();
        let mut q = ComplexMatrix::zeros(d, n);
        for (k, v) in range.iter().enumerate() {
            q.set_col(k, v);
        }
        let reduced: Vec<ComplexMatrix> = a.elements().iter().map(|m| m.conjugate_by_adjoint(&q)).collect();
        let reduced = orthonormalize(&reduced, tol);
        let mut found = None;
        for attempt in 0..ATTEMPTS {
            let mut rng = Rng::derived(seed, 0xb10c_0000 + 64 * bi as u64 + attempt);
            if let Some(b) = factor_block(&reduced, &q, &mut rng) {
                found = Some(b);
                break;
            }
        }
        blocks.push(found.ok_or_else(|| Error::NumericDefect(format!("could not factor block {bi}")))?);
    }
    let bs = BlockStructure { blocks };
    for m in a.elements() {
        let (_, dev) = bs.decompose(m);
        if dev > 1e-8 {
            return Err(Error::NumericDefect(format!("block reconstruction residual {dev:e}")));
        }
    }
    Ok(bs)
}

/// Factor one block whose reduced algebra acts on `C^n` (`q: d×n`).
fn factor_block(reduced: &crate::linalg::OperatorBasis, q: &ComplexMatrix, rng: &mut Rng) -> Option<Block> {
    let n = q.cols();
    let h = random_hermitian_element(reduced, rng);
    let pairs = herm_eig(&h, 1e-9).ok()?;
    let scale = pairs.iter().map(|p| p.value.abs()).fold(1.0, f64::max);
    let mut groups: Vec<Vec<Vec<C64>>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for p in pairs {
        if groups.is_empty() || p.value - last > crate::DEFAULT_GROUP_TOL * scale {
            groups.push(Vec::new());
        }
        last = p.value;
        groups.last_mut().expect("group").push(p.vector);
    }
    let l = groups.len();
    let r = n / l;
    if groups.iter().any(|g| g.len() != r) {
        return None;
    }
    let proj = |g: &[Vec<C64>]| {
        let mut p = ComplexMatrix::zeros(n, n);
        for v in g {
            p.axpy(c64(1.0, 0.0), &ComplexMatrix::outer(v));
        }
        p
    };
    let e1 = proj(&groups[0]);
    let mut local = ComplexMatrix::zeros(n, l * r);
    for (s, f) in groups[0].iter().enumerate() {
        local.set_col(s, f);
    }
    for (k, g) in groups.iter().enumerate().skip(1) {
        let ek = proj(g);
        let mut unit = None;
        for _ in 0..4 {
            let x = random_element(reduced, rng);
            let u = e1.matmul(&x).matmul(&ek);
            let weight = u.mul_adjoint(&u).trace().re / r as f64;
            if weight > 1e-6 {
                unit = Some(u.scale_real(1.0 / libm::sqrt(weight)));
                break;
            }
        }
        let u = unit?;
        for (s, f) in groups[0].iter().enumerate() {
            let v = u.adjoint().mul_vec(f);
            local.set_col(k * r + s, &v);
        }
    }
    let isometry = q.matmul(&local);
    if !isometry.is_isometry(1e-8) {
        return None;
    }
    Some(Block { left_dim: l, right_dim: r, isometry })
}
