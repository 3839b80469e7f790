//! History probabilities over placed decompositions.
//!
//! For a history `h` choosing projector `P_k^{e_k}` from each decomposition,
//! with Heisenberg projectors multiplied in temporal order,
//! `M_h = P̃_1 P̃_2 ⋯ P̃_N`:
//!
//! * the linear form is `p(h) = Re Tr(M_h) / d`;
//! * the sandwich form is `Tr(M_h† M_h) / d` (maximally mixed input);
//! * the decoherence functional is `D(h, h') = Tr(M_h† M_{h'}) / d`.
//!
//! The circuit is first pruned to the gates upstream of the placements, and
//! `d` is the input dimension of the pruned circuit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{Circuit, Embedder};
use crate::influence::{temporal_positions, PlacedDecomp};
use crate::linalg::{c64, ComplexMatrix, C64};
use crate::preference::PreferredSet;
use crate::rng::Rng;
use crate::{Error, Result};

pub type History = Vec<usize>;

/// Default cap on the number of histories in a dense table.
pub const HISTORY_CAP: usize = 1_000_000;
/// Probabilities in `[-CLAMP, 0)` are rounding noise and clamp to zero.
pub const CLAMP: f64 = 1e-10;
/// Cap on stored complex entries when all history operators are needed.
const OPERATOR_STORE_CAP: usize = 1 << 24;

/// All histories in lexicographic order.
pub fn history_space(placed: &[PlacedDecomp]) -> Result<Vec<History>> {
    let sizes: Vec<usize> = placed.iter().map(|p| p.decomp.len()).collect();
    let total = history_count(&sizes, HISTORY_CAP)?;
    Ok((0..total).map(|i| unflatten(&sizes, i)).collect())
}

fn history_count(sizes: &[usize], cap: usize) -> Result<usize> {
    let mut total: usize = 1;
    for &s in sizes {
        total = total.checked_mul(s).filter(|&t| t <= cap).ok_or(Error::CapExceeded {
            size: sizes.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
            cap,
        })?;
    }
    Ok(total)
}

fn unflatten(sizes: &[usize], mut idx: usize) -> History {
    let mut h = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        h[k] = idx % sizes[k];
        idx /= sizes[k];
    }
    h
}

fn flatten(sizes: &[usize], h: &[usize]) -> usize {
    h.iter().zip(sizes).fold(0, |acc, (&e, &s)| acc * s + e)
}

/// Heisenberg projectors of placed decompositions in temporal order, on the
/// circuit pruned to what lies upstream of the placements.
struct Engine {
    /// `order[k]` is the index into the caller's list of the k-th placement.
    order: Vec<usize>,
    /// Heisenberg projectors per placement, temporal order; `None` for `{I}`.
    ops: Vec<Option<Vec<ComplexMatrix>>>,
    sizes: Vec<usize>,
    dim: usize,
}

/// The gates upstream of the placements, plus the placement wires.
pub fn prune(c: &Circuit, placed: &[PlacedDecomp]) -> Result<Circuit> {
    let top = c.topology()?;
    let mut mask = vec![false; top.num_gates()];
    let mut extra = Vec::with_capacity(placed.len());
    for p in placed {
        let &w = top.wire_index.get(&p.at.wire).ok_or_else(|| Error::UnknownWire(p.at.wire.clone()))?;
        for (m, a) in mask.iter_mut().zip(top.wire_ancestors(w)) {
            *m |= a;
        }
        extra.push(w);
    }
    Ok(c.subcircuit(&top, &mask, &extra))
}

impl Engine {
    fn new(c: &Circuit, placed: &[PlacedDecomp]) -> Result<Engine> {
        let order = temporal_positions(c, placed)?;
        let pruned = prune(c, placed)?;
        let top = pruned.topology()?;
        let mut emb = Embedder::new(&pruned, &top);
        let dim = emb.input_dim();
        let mut ops = Vec::with_capacity(placed.len());
        let mut sizes = Vec::with_capacity(placed.len());
        for &i in &order {
            let p = &placed[i];
            let wdim = pruned.wire_dim(&p.at.wire)?;
            if p.decomp.dim() != wdim {
                return Err(Error::DimensionMismatch(format!(
                    "decomposition of dimension {} placed on wire `{}` of dimension {wdim}",
                    p.decomp.dim(),
                    p.at.wire
                )));
            }
            sizes.push(p.decomp.len());
            if p.decomp.is_trivial() {
                ops.push(None);
            } else {
                let heis = p.decomp.projectors().iter().map(|q| emb.embed(q, &p.at.wire)).collect::<Result<_>>()?;
                ops.push(Some(heis));
            }
        }
        Ok(Engine { order, ops, sizes, dim })
    }

    /// `M_h` for a history given in temporal order (`None` means identity).
    fn product(&self, h: &[usize]) -> Result<Option<ComplexMatrix>> {
        let mut acc: Option<ComplexMatrix> = None;
        for (k, &e) in h.iter().enumerate() {
            if e >= self.sizes[k] {
                return Err(Error::IndexOutOfRange(format!("event {e} for a decomposition of size {}", self.sizes[k])));
            }
            if let Some(ops) = &self.ops[k] {
                acc = Some(match acc {
                    None => ops[e].clone(),
                    Some(m) => m.matmul(&ops[e]),
                });
            }
        }
        Ok(acc)
    }

    fn to_temporal(&self, h: &[usize]) -> Result<History> {
        if h.len() != self.order.len() {
            return Err(Error::IndexOutOfRange(format!("history of length {} for {} decompositions", h.len(), self.order.len())));
        }
        Ok(self.order.iter().map(|&i| h[i]).collect())
    }

    fn trace(&self, m: &Option<ComplexMatrix>) -> C64 {
        match m {
            None => c64(self.dim as f64, 0.0),
            Some(m) => m.trace(),
        }
    }

    fn sandwich(&self, m: &Option<ComplexMatrix>) -> f64 {
        match m {
            None => 1.0,
            Some(m) => {
                let f = m.frobenius_norm();
                f * f / self.dim as f64
            }
        }
    }

    /// Depth-first walk over all histories (temporal order), reusing prefix
    /// products; `visit(index, M_h)` is called for each history whose
    /// product is not identically zero.
    fn walk(&self, mut visit: impl FnMut(usize, &Option<ComplexMatrix>)) -> Result<()> {
        history_count(&self.sizes, HISTORY_CAP)?;
        self.walk_from(0, 0, &None, &mut visit);
        Ok(())
    }

    fn walk_from(&self, k: usize, prefix: usize, acc: &Option<ComplexMatrix>, visit: &mut impl FnMut(usize, &Option<ComplexMatrix>)) {
        if k == self.sizes.len() {
            visit(prefix, acc);
            return;
        }
        match &self.ops[k] {
            None => self.walk_from(k + 1, prefix * self.sizes[k], acc, visit),
            Some(ops) => {
                for (e, p) in ops.iter().enumerate() {
                    let next = match acc {
                        None => p.clone(),
                        Some(m) => m.matmul(p),
                    };
                    if next.max_abs() <= 1e-14 {
                        continue;
                    }
                    self.walk_from(k + 1, prefix * self.sizes[k] + e, &Some(next), visit);
                }
            }
        }
    }
}

/// Linear-form probability of a history (indices aligned with `placed`).
pub fn history_probability(c: &Circuit, placed: &[PlacedDecomp], h: &[usize]) -> Result<f64> {
    let eng = Engine::new(c, placed)?;
    let ht = eng.to_temporal(h)?;
    let m = eng.product(&ht)?;
    Ok(clamp(eng.trace(&m).re / eng.dim as f64))
}

/// Sandwich-form probability `Tr(M_h† M_h)/d` of a history.
pub fn sandwich_probability(c: &Circuit, placed: &[PlacedDecomp], h: &[usize]) -> Result<f64> {
    let eng = Engine::new(c, placed)?;
    let m = eng.product(&eng.to_temporal(h)?)?;
    Ok(eng.sandwich(&m))
}

/// History probability for a preferred set, cross-checked against the
/// sandwich form.
pub fn preferred_history_probability(c: &Circuit, ps: &PreferredSet, h: &[usize]) -> Result<f64> {
    let eng = Engine::new(c, &ps.entries)?;
    let m = eng.product(&eng.to_temporal(h)?)?;
    let linear = eng.trace(&m).re / eng.dim as f64;
    let sandwich = eng.sandwich(&m);
    if (linear - sandwich).abs() > 1e-8 {
        return Err(Error::NumericDefect(format!("linear form {linear} and sandwich form {sandwich} disagree")));
    }
    Ok(clamp(linear))
}

fn clamp(p: f64) -> f64 {
    if (-CLAMP..0.0).contains(&p) {
        0.0
    } else {
        p
    }
}

/// `D(h, h2) = Tr(M_h† M_{h2}) / d`.
pub fn decoherence_functional(c: &Circuit, placed: &[PlacedDecomp], h: &[usize], h2: &[usize]) -> Result<C64> {
    let eng = Engine::new(c, placed)?;
    let a = eng.product(&eng.to_temporal(h)?)?;
    let b = eng.product(&eng.to_temporal(h2)?)?;
    let d = eng.dim as f64;
    let id = ComplexMatrix::identity(eng.dim);
    let a = a.unwrap_or_else(|| id.clone());
    let b = b.unwrap_or(id);
    Ok(a.hs_inner(&b) / d)
}

/// Result of [`consistency_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// Largest `|Re D(h, h')|` over distinct histories.
    pub max_off_diagonal: f64,
    /// Histories (lexicographic indices, temporal order) attaining it.
    pub worst_pair: Option<(usize, usize)>,
}

/// Whether all off-diagonal real parts of the decoherence functional vanish.
pub fn consistency_check(c: &Circuit, placed: &[PlacedDecomp], tol: f64) -> Result<ConsistencyReport> {
    let eng = Engine::new(c, placed)?;
    let total = history_count(&eng.sizes, HISTORY_CAP)?;
    let per = eng.dim * eng.dim;
    if total.saturating_mul(per) > OPERATOR_STORE_CAP {
        return Err(Error::CapExceeded { size: total.saturating_mul(per), cap: OPERATOR_STORE_CAP });
    }
    let mut stored: Vec<(usize, ComplexMatrix)> = Vec::new();
    eng.walk(|idx, m| stored.push((idx, m.clone().unwrap_or_else(|| ComplexMatrix::identity(eng.dim)))))?;
    let d = eng.dim as f64;
    let mut worst = 0.0;
    let mut pair = None;
    for i in 0..stored.len() {
        for j in i + 1..stored.len() {
            let v = (stored[i].1.hs_inner(&stored[j].1).re / d).abs();
            if v > worst {
                worst = v;
                pair = Some((stored[i].0, stored[j].0));
            }
        }
    }
    Ok(ConsistencyReport { consistent: worst <= tol, max_off_diagonal: worst, worst_pair: pair })
}

/// Dense table of history probabilities, decompositions in temporal order.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryDistribution {
    pub placed: Vec<PlacedDecomp>,
    pub sizes: Vec<usize>,
    pub probs: Vec<f64>,
    /// Input dimension `d` of the (pruned) circuit.
    pub dim: usize,
}

/// Probability table (linear form) with decompositions sorted into
/// temporal order.
pub fn history_distribution(c: &Circuit, placed: &[PlacedDecomp]) -> Result<HistoryDistribution> {
    Ok(history_tables(c, placed)?.0)
}

/// Probability table together with the sandwich-form table.
pub fn history_tables(c: &Circuit, placed: &[PlacedDecomp]) -> Result<(HistoryDistribution, Vec<f64>)> {
    let eng = Engine::new(c, placed)?;
    let total = history_count(&eng.sizes, HISTORY_CAP)?;
    let mut probs = vec![0.0; total];
    let mut sandwich = vec![0.0; total];
    let d = eng.dim as f64;
    eng.walk(|idx, m| {
        probs[idx] = clamp(eng.trace(m).re / d);
        sandwich[idx] = eng.sandwich(m);
    })?;
    let sorted: Vec<PlacedDecomp> = eng.order.iter().map(|&i| placed[i].clone()).collect();
    Ok((HistoryDistribution { placed: sorted, sizes: eng.sizes.clone(), probs, dim: eng.dim }, sandwich))
}

/// Distribution of a preferred set; the linear and sandwich forms must agree
/// and no probability may be materially negative.
pub fn preferred_distribution(c: &Circuit, ps: &PreferredSet) -> Result<HistoryDistribution> {
    let (dist, sandwich) = history_tables(c, &ps.entries)?;
    let gap = dist.probs.iter().zip(&sandwich).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > 1e-8 {
        return Err(Error::NumericDefect(format!("linear and sandwich forms differ by {gap:e}")));
    }
    if let Some(p) = dist.probs.iter().find(|&&p| p < -CLAMP) {
        return Err(Error::NumericDefect(format!("negative history probability {p:e}")));
    }
    Ok(dist)
}

impl HistoryDistribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index(&self, h: &[usize]) -> Result<usize> {
        if h.len() != self.sizes.len() || h.iter().zip(&self.sizes).any(|(&e, &s)| e >= s) {
            return Err(Error::IndexOutOfRange(format!("history {h:?} for sizes {:?}", self.sizes)));
        }
        Ok(flatten(&self.sizes, h))
    }

    pub fn history(&self, idx: usize) -> History {
        unflatten(&self.sizes, idx)
    }

    pub fn prob(&self, h: &[usize]) -> Result<f64> {
        Ok(self.probs[self.index(h)?])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn min_probability(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Position of the decomposition placed at `wire`/`side`.
    pub fn position(&self, wire: &str, side: crate::circuit::Side) -> Option<usize> {
        self.placed.iter().position(|p| p.at.wire == wire && p.at.side == side)
    }

    /// Marginal over the decompositions at `keep` (in the given order).
    pub fn marginal(&self, keep: &[usize]) -> Result<HistoryDistribution> {
        if keep.iter().any(|&k| k >= self.sizes.len()) {
            return Err(Error::IndexOutOfRange("marginal position".into()));
        }
        let sizes: Vec<usize> = keep.iter().map(|&k| self.sizes[k]).collect();
        let mut probs = vec![0.0; sizes.iter().product()];
        for (idx, &p) in self.probs.iter().enumerate() {
            let h = self.history(idx);
            let sub: Vec<usize> = keep.iter().map(|&k| h[k]).collect();
            probs[flatten(&sizes, &sub)] += p;
        }
        Ok(HistoryDistribution {
            placed: keep.iter().map(|&k| self.placed[k].clone()).collect(),
            sizes,
            probs,
            dim: self.dim,
        })
    }

    /// Probability that the decompositions at the given positions take the
    /// given events.
    pub fn event_probability(&self, given: &[(usize, usize)]) -> Result<f64> {
        for &(k, e) in given {
            if k >= self.sizes.len() || e >= self.sizes[k] {
                return Err(Error::IndexOutOfRange(format!("condition ({k}, {e})")));
            }
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let h = self.history(*idx);
                given.iter().all(|&(k, e)| h[k] == e)
            })
            .map(|(_, &p)| p)
            .sum())
    }

    /// Bayes conditioning on `(position, event)` pairs.
    pub fn conditional(&self, given: &[(usize, usize)]) -> Result<HistoryDistribution> {
        let norm = self.event_probability(given)?;
        if norm <= 1e-12 {
            return Err(Error::ZeroProbabilityCondition(norm));
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(idx, &p)| {
                let h = self.history(idx);
                if given.iter().all(|&(k, e)| h[k] == e) {
                    p / norm
                } else {
                    0.0
                }
            })
            .collect();
        Ok(HistoryDistribution { placed: self.placed.clone(), sizes: self.sizes.clone(), probs, dim: self.dim })
    }
}

/// Inverse-CDF sample over the lexicographic enumeration.
pub fn sample_history(dist: &HistoryDistribution, seed: u64) -> History {
    let mut rng = Rng::new(seed);
    sample_with(dist, &mut rng)
}

fn sample_with(dist: &HistoryDistribution, rng: &mut Rng) -> History {
    let total: f64 = dist.probs.iter().map(|p| p.max(0.0)).sum();
    let target = rng.uniform() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (idx, &p) in dist.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cum += p;
        last = idx;
        if target < cum {
            return dist.history(idx);
        }
    }
    dist.history(last)
}

/// `n` samples; the `i`-th uses seed `seed + i`, so each row can be
/// reproduced alone with [`sample_history`].
pub fn sample_histories(dist: &HistoryDistribution, seed: u64, n: usize) -> Vec<(u64, History)> {
    (0..n as u64)
        .map(|i| {
            let s = seed.wrapping_add(i);
            (s, sample_history(dist, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ProjDecomp;
    use crate::circuit::{CircuitBuilder, Placement};

    fn chain() -> Circuit {
        CircuitBuilder::new()
            .wires(&["a", "b", "c"], 2)
            .gate("g1", &["a"], &["b"], ComplexMatrix::identity(2))
            .gate("g2", &["b"], &["c"], ComplexMatrix::identity(2))
            .build()
            .unwrap()
    }

    fn x_basis() -> ProjDecomp {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        ProjDecomp::from_unitary_columns(&ComplexMatrix::from_real(2, &[h, h, h, -h]))
    }

    #[test]
    fn history_space_examples() {
        assert_eq!(history_space(&[]).unwrap(), vec![Vec::<usize>::new()]);
        let p = |n| PlacedDecomp::new(ProjDecomp::computational(n), Placement::input("a"));
        assert_eq!(history_space(&[p(2)]).unwrap(), vec![vec![0], vec![1]]);
        let hs = history_space(&[p(2), p(3)]).unwrap();
        assert_eq!(hs.len(), 6);
        assert_eq!(hs[4], vec![1, 1]);
    }

    #[test]
    fn trivial_decomps_give_certainty() {
        let c = chain();
        let placed = [PlacedDecomp::new(ProjDecomp::trivial(2), Placement::output("b"))];
        assert!((history_probability(&c, &placed, &[0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_x_z_is_inconsistent() {
        let c = chain();
        let placed = [
            PlacedDecomp::new(ProjDecomp::computational(2), Placement::input("a")),
            PlacedDecomp::new(x_basis(), Placement::input("b")),
            PlacedDecomp::new(ProjDecomp::computational(2), Placement::input("c")),
        ];
        let rep = consistency_check(&c, &placed, 1e-8).unwrap();
        assert!(!rep.consistent);
        assert!((rep.max_off_diagonal - 0.125).abs() < 1e-12);
        let d = decoherence_functional(&c, &placed, &[0, 0, 1], &[0, 1, 1]).unwrap();
        let e = decoherence_functional(&c, &placed, &[0, 1, 1], &[0, 0, 1]).unwrap();
        assert!((d - e.conj()).norm() < 1e-14);
    }

    #[test]
    fn conditioning_and_sampling() {
        let c = chain();
        let placed = [PlacedDecomp::new(ProjDecomp::computational(2), Placement::input("a"))];
        let dist = history_distribution(&c, &placed).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-12);
        let point = dist.conditional(&[(0, 1)]).unwrap();
        assert_eq!(point.probs, vec![0.0, 1.0]);
        assert_eq!(sample_history(&point, 3), vec![1]);
        assert_eq!(sample_history(&dist, 17), sample_history(&dist, 17));
        assert!(dist.conditional(&[]).unwrap() == dist);
    }
}
