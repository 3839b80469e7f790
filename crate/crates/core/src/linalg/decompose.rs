//! QR, Hermitian eigendecomposition (cyclic Jacobi) and nullspaces
//! (QR followed by one-sided Jacobi SVD).

use alloc::vec;
use alloc::vec::Vec;

use super::{c64, ComplexMatrix, C64};
use crate::{Error, Result};

const JACOBI_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Thin Householder QR: `a = q · r` with `q` having orthonormal columns.
/// Returns `(q, r)` with `q: m×k`, `r: k×n`, `k = min(m, n)`.
pub fn qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(k);
    for j in 0..k {
        let x: Vec<C64> = (j..m).map(|i| r[(i, j)]).collect();
        let xnorm = libm::sqrt(norm_sqr(&x));
        let mut v = x.clone();
        if xnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { c64(1.0, 0.0) };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = libm::sqrt(norm_sqr(&v));
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // r <- (I - 2 v v†) r on rows j..m
        for c in j..n {
            let mut dot = c64(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * r[(j + t, c)];
            }
            for (t, vi) in v.iter().enumerate() {
                let upd = *vi * dot * 2.0;
                r[(j + t, c)] -= upd;
            }
        }
        for i in j + 1..m {
            r[(i, j)] = c64(0.0, 0.0);
        }
        reflectors.push(v);
    }
    // q = H_0 H_1 ... H_{k-1} applied to the first k columns of I.
    let mut q = ComplexMatrix::from_fn(m, k, |i, c| if i == c { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    for j in (0..k).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..k {
            let mut dot = c64(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * q[(j + t, c)];
            }
            for (t, vi) in v.iter().enumerate() {
                let upd = *vi * dot * 2.0;
                q[(j + t, c)] -= upd;
            }
        }
    }
    let r_thin = ComplexMatrix::from_fn(k, n, |i, c| r[(i, c)]);
    (q, r_thin)
}

/// Rotation diagonalizing the Hermitian 2×2 block `[[a, g], [g*, b]]`:
/// returns `(c, s, e)` for `G = [[c, s], [-s·e, c·e]]` with `e = exp(-i arg g)`.
fn jacobi_rotation(a: f64, b: f64, g: C64) -> (f64, f64, C64) {
    let gn = g.norm();
    let e = g.conj() / gn;
    let theta = (b - a) / (2.0 * gn);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    (c, t * c, e)
}

/// Apply `G` from the right to columns `p`, `q` of `m`.
fn rotate_cols(m: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    for r in 0..m.rows() {
        let xp = m[(r, p)];
        let xq = m[(r, q)];
        m[(r, p)] = xp * c - xq * e * s;
        m[(r, q)] = xp * s + xq * e * c;
    }
}

/// Apply `G†` from the left to rows `p`, `q` of `m`.
fn rotate_rows(m: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    let ec = e.conj();
    for k in 0..m.cols() {
        let xp = m[(p, k)];
        let xq = m[(q, k)];
        m[(p, k)] = xp * c - xq * ec * s;
        m[(q, k)] = xp * s + xq * ec * c;
    }
}

/// Eigenvalue with its eigenvector.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<C64>,
}

/// Full eigendecomposition of a Hermitian matrix, ascending eigenvalues.
pub fn herm_eig(h: &ComplexMatrix, tol: f64) -> Result<Vec<EigenPair>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition of a non-square matrix".into()));
    }
    let dev = h.hermitian_deviation();
    if dev > tol * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if libm::sqrt(off) <= JACOBI_EPS * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[(p, q)];
                if g.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, e) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, g);
                rotate_cols(&mut a, p, q, c, s, e);
                rotate_rows(&mut a, p, q, c, s, e);
                a[(p, q)] = c64(0.0, 0.0);
                a[(q, p)] = c64(0.0, 0.0);
                a[(p, p)] = c64(a[(p, p)].re, 0.0);
                a[(q, q)] = c64(a[(q, q)].re, 0.0);
                rotate_cols(&mut v, p, q, c, s, e);
            }
        }
    }
    let mut pairs: Vec<EigenPair> =
        (0..n).map(|i| EigenPair { value: a[(i, i)].re, vector: v.col(i) }).collect();
    pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(pairs)
}

/// Spectral projectors of a Hermitian matrix, merging eigenvalues closer
/// than `group_tol` (relative to the spectral scale when it exceeds 1).
pub fn herm_eig_projectors(h: &ComplexMatrix, group_tol: f64) -> Result<Vec<(f64, ComplexMatrix)>> {
    let pairs = herm_eig(h, crate::DEFAULT_TOL)?;
    let n = h.rows();
    let scale = pairs.iter().map(|p| p.value.abs()).fold(1.0, f64::max);
    let mut out: Vec<(f64, ComplexMatrix)> = Vec::new();
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].value - pairs[start].value <= group_tol * scale {
            end += 1;
        }
        let mut proj = ComplexMatrix::zeros(n, n);
        let mut mean = 0.0;
        for p in &pairs[start..end] {
            proj.axpy(c64(1.0, 0.0), &ComplexMatrix::outer(&p.vector));
            mean += p.value;
        }
        out.push((mean / (end - start) as f64, proj));
        start = end;
    }
    Ok(out)
}

/// One-sided Jacobi on the columns of `a`; returns column norms (singular
/// values, unsorted) and the accumulated right rotation.
fn one_sided_jacobi(mut a: ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.cols();
    let mut v = ComplexMatrix::identity(n);
    let mut norms: Vec<f64> = (0..n).map(|j| norm_sqr(&a.col(j))).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let mut gamma = c64(0.0, 0.0);
                for r in 0..a.rows() {
                    gamma += a[(r, p)].conj() * a[(r, q)];
                }
                if gamma.norm() <= JACOBI_EPS * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let (c, s, e) = jacobi_rotation(alpha, beta, gamma);
                rotate_cols(&mut a, p, q, c, s, e);
                rotate_cols(&mut v, p, q, c, s, e);
                norms[p] = norm_sqr(&a.col(p));
                norms[q] = norm_sqr(&a.col(q));
            }
        }
        if !rotated {
            break;
        }
    }
    (norms.into_iter().map(libm::sqrt).collect(), v)
}

/// Orthonormal basis of `{v : ‖a v‖ ≤ tol·σ_max·max(rows, cols)}`.
pub fn nullspace(a: &ComplexMatrix, tol: f64) -> Vec<Vec<C64>> {
    nullspace_with_floor(a, tol, 0.0)
}

/// Like [`nullspace`], with `σ_max` replaced by `max(σ_max, floor)`, so that a
/// map that is zero up to rounding on a problem of known scale is recognized.
pub fn nullspace_with_floor(a: &ComplexMatrix, tol: f64, floor: f64) -> Vec<Vec<C64>> {
    let reduced = if a.rows() > a.cols() { qr(a).1 } else { a.clone() };
    nullspace_reduced(reduced, a.rows(), tol, floor)
}

/// Nullspace of the vertical stack of `blocks` (all with `cols` columns),
/// reducing incrementally so the full stack is never stored.
pub fn nullspace_stacked<I>(blocks: I, cols: usize, tol: f64, floor: f64) -> Vec<Vec<C64>>
where
    I: IntoIterator<Item = ComplexMatrix>,
{
    let mut acc = ComplexMatrix::zeros(0, cols);
    let mut total_rows = 0;
    let mut pending: Vec<C64> = Vec::new();
    let mut pending_rows = 0;
    let flush = |acc: &mut ComplexMatrix, pending: &mut Vec<C64>, pending_rows: &mut usize| {
        if *pending_rows == 0 {
            return;
        }
        let mut data = core::mem::take(acc).into_data();
        data.append(pending);
        let stacked = ComplexMatrix::from_vec(data.len() / cols, cols, data).expect("stack shape");
        *acc = if stacked.rows() > cols { qr(&stacked).1 } else { stacked };
        *pending_rows = 0;
    };
    for b in blocks {
        assert_eq!(b.cols(), cols, "nullspace_stacked: column mismatch");
        total_rows += b.rows();
        pending_rows += b.rows();
        pending.extend_from_slice(b.data());
        if pending_rows >= 4 * cols.max(16) {
            flush(&mut acc, &mut pending, &mut pending_rows);
        }
    }
    flush(&mut acc, &mut pending, &mut pending_rows);
    nullspace_reduced(acc, total_rows, tol, floor)
}

fn nullspace_reduced(reduced: ComplexMatrix, rows: usize, tol: f64, floor: f64) -> Vec<Vec<C64>> {
    let n = reduced.cols();
    if n == 0 {
        return Vec::new();
    }
    let (sigma, v) = one_sided_jacobi(reduced);
    let smax = sigma.iter().cloned().fold(floor, f64::max);
    let a_rows = rows;
    if smax == 0.0 {
        return (0..n)
            .map(|k| {
                let mut e = vec![c64(0.0, 0.0); n];
                e[k] = c64(1.0, 0.0);
                e
            })
            .collect();
    }
    let thr = tol * smax * a_rows.max(n) as f64;
    let mut idx: Vec<usize> = (0..n).filter(|&k| sigma[k] <= thr).collect();
    idx.sort_by(|&x, &y| sigma[x].total_cmp(&sigma[y]).then(x.cmp(&y)));
    idx.into_iter().map(|k| v.col(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_hermitian;
    use crate::rng::Rng;

    #[test]
    fn qr_reconstructs() {
        let mut rng = Rng::new(3);
        let a = ComplexMatrix::from_fn(6, 4, |_, _| rng.complex_normal());
        let (q, r) = qr(&a);
        assert!(q.matmul(&r).max_diff(&a) < 1e-12);
        assert!(q.is_isometry(1e-12));
        for i in 0..r.rows() {
            for j in 0..i {
                assert_eq!(r[(i, j)], c64(0.0, 0.0));
            }
        }
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = Rng::new(9);
        for n in [1, 2, 5, 16] {
            let h = random_hermitian(n, &mut rng);
            let proj = herm_eig_projectors(&h, 1e-7).unwrap();
            let mut acc = ComplexMatrix::zeros(n, n);
            for (l, p) in &proj {
                acc.axpy(c64(*l, 0.0), p);
            }
            assert!(acc.max_diff(&h) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn eig_projector_examples() {
        let p = herm_eig_projectors(&ComplexMatrix::identity(3), 1e-7).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].1.max_diff(&ComplexMatrix::identity(3)) < 1e-14);
        let d = ComplexMatrix::from_real(3, &[0., 0., 0., 0., 0., 0., 0., 0., 5.]);
        let p = herm_eig_projectors(&d, 1e-7).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[1].0 - 5.0).abs() < 1e-14);
        assert!(p[0].1.max_diff(&ComplexMatrix::from_real(3, &[1., 0., 0., 0., 1., 0., 0., 0., 0.])) < 1e-14);
        let x = ComplexMatrix::from_real(2, &[0., 1., 1., 0.]);
        let p = herm_eig_projectors(&x, 1e-7).unwrap();
        assert!((p[0].0 + 1.0).abs() < 1e-14);
        let minus = ComplexMatrix::from_real(2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(p[0].1.max_diff(&minus) < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, &[0., 1., 0., 0.]);
        assert!(matches!(herm_eig(&m, 1e-9), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace(&ComplexMatrix::zeros(3, 3), 1e-9).len(), 3);
        assert!(nullspace(&ComplexMatrix::identity(3), 1e-9).is_empty());
        let stacked = nullspace_stacked(
            [ComplexMatrix::from_real(3, &[1., 0., 0., 0., 0., 0., 0., 0., 0.]), ComplexMatrix::from_real(3, &[0., 0., 0., 0., 0., 0., 0., 0., 3.])],
            3,
            1e-9,
            0.0,
        );
        assert_eq!(stacked.len(), 1);
        let d = ComplexMatrix::from_real(3, &[1., 0., 0., 0., 0., 0., 0., 0., 2.]);
        let ns = nullspace(&d, 1e-9);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nullspace_of_tall_rank_deficient() {
        let mut rng = Rng::new(4);
        let b = ComplexMatrix::from_fn(12, 3, |_, _| rng.complex_normal());
        let c = ComplexMatrix::from_fn(3, 5, |_, _| rng.complex_normal());
        let a = b.matmul(&c);
        let ns = nullspace(&a, 1e-9);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let av = a.mul_vec(v);
            assert!(libm::sqrt(norm_sqr(&av)) < 1e-10);
        }
    }
}
