//! Seeded random circuits, bubbles and channel instances for property
//! checks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::algebra::ProjDecomp;
use crate::circuit::{Bubble, Circuit, CircuitBuilder};
use crate::influence::ChannelSplit;
use crate::linalg::{haar_unitary_with, herm_eig, kron, random_rank_partition, ComplexMatrix};
use crate::rng::Rng;
use crate::Result;

/// A circuit of one to `max_gates` gates on one or two wires each, over two
/// or three input wires of dimension 2 to `max_dim`. Single-wire gates are
/// Haar; most two-wire gates are controlled unitaries or controlled shifts
/// in a random control basis, so that preferred decompositions are often
/// nontrivial.
pub fn random_circuit(seed: u64, max_gates: usize, max_dim: usize) -> Result<Circuit> {
    let mut rng = Rng::derived(seed, 0xc12c);
    let max_dim = max_dim.max(2);
    let mut b = CircuitBuilder::new();
    let mut open: Vec<(String, usize)> = Vec::new();
    let mut next = 0usize;
    let mut fresh = |dim: usize, b: CircuitBuilder| {
        let id = format!("w{next}");
        next += 1;
        (b.wire(&id, dim), (id, dim))
    };
    for _ in 0..2 + rng.below(2) {
        let dim = 2 + rng.below(max_dim - 1);
        let (nb, w) = fresh(dim, b);
        b = nb;
        open.push(w);
    }
    let gates = 1 + rng.below(max_gates.max(1));
    for g in 0..gates {
        let arity = if open.len() >= 2 && rng.below(4) > 0 { 2 } else { 1 };
        let mut ins = Vec::with_capacity(arity);
        for _ in 0..arity {
            let k = rng.below(open.len());
            ins.push(open.remove(k));
        }
        let dims: Vec<usize> = ins.iter().map(|w| w.1).collect();
        let total: usize = dims.iter().product();
        let mut outs = Vec::with_capacity(arity);
        for &d in &dims {
            let (nb, w) = fresh(d, b);
            b = nb;
            outs.push(w);
        }
        let in_ids: Vec<&str> = ins.iter().map(|w| w.0.as_str()).collect();
        let out_ids: Vec<&str> = outs.iter().map(|w| w.0.as_str()).collect();
        let matrix = if arity == 2 { two_wire_gate(dims[0], dims[1], &mut rng)? } else { haar_unitary_with(total, &mut rng) };
        b = b.gate(&format!("g{g}"), &in_ids, &out_ids, matrix);
        open.extend(outs);
    }
    b.build()
}

fn two_wire_gate(dc: usize, dt: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    let n = dc * dt;
    let kind = rng.below(6);
    if kind == 0 {
        return Ok(haar_unitary_with(n, rng));
    }
    // Block-diagonal in a random basis of the control wire.
    let mut blocks = ComplexMatrix::zeros(n, n);
    for k in 0..dc {
        let u = if kind == 1 { haar_unitary_with(dt, rng) } else { shift_power(dt, k) };
        for r in 0..dt {
            for c in 0..dt {
                blocks[(k * dt + r, k * dt + c)] = u[(r, c)];
            }
        }
    }
    let basis = kron(&haar_unitary_with(dc, rng), &ComplexMatrix::identity(dt))?;
    Ok(basis.matmul(&blocks).mul_adjoint(&basis))
}

/// `|t⟩ ↦ |t + k mod d⟩`.
fn shift_power(d: usize, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |r, c| crate::c64(if r == (c + k) % d { 1.0 } else { 0.0 }, 0.0))
}

/// Distinct wires of `c`. One time in four, a uniform subset of two to
/// `max_wires` wires; otherwise an input and an output of the same gate.
pub fn random_bubble(c: &Circuit, seed: u64, max_wires: usize) -> Result<Bubble> {
    let mut rng = Rng::derived(seed, 0xb0bb);
    let mut ids: Vec<String> = c.wires.iter().map(|w| w.id.clone()).collect();
    let most = max_wires.clamp(1, ids.len());
    let least = most.min(2);
    let walk = rng.below(4) > 0;
    let n = if walk { least } else { least + rng.below(most - least + 1) };
    let mut pick: Vec<String> = Vec::with_capacity(n);
    while pick.len() < n {
        let candidates: Vec<usize> = if walk && !pick.is_empty() {
            (0..ids.len()).filter(|&k| pick.iter().any(|p| adjacent(c, p, &ids[k]))).collect()
        } else {
            (0..ids.len()).collect()
        };
        if candidates.is_empty() {
            break;
        }
        let k = candidates[rng.below(candidates.len())];
        pick.push(ids.remove(k));
    }
    Bubble::from_ids(c, pick)
}

/// Whether some gate has one wire as an input and the other as an output.
fn adjacent(c: &Circuit, a: &str, b: &str) -> bool {
    c.gates.iter().any(|g| {
        let is_in = |w: &str| g.inputs.iter().any(|x| x == w);
        let is_out = |w: &str| g.outputs.iter().any(|x| x == w);
        (is_in(a) && is_out(b)) || (is_out(a) && is_in(b))
    })
}

/// How a random channel instance was drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    /// Haar unitary on the whole space.
    Haar,
    /// `U_AC ⊗ U_BD`: no route from `A` to `D`.
    Product,
    /// Block-diagonal along the `A` decomposition, which is conserved.
    Controlled,
}

/// A channel with decompositions on `A` and `D`.
#[derive(Clone, Debug)]
pub struct InfluenceInstance {
    pub kind: InstanceKind,
    pub channel: ChannelSplit,
    pub pa: ProjDecomp,
    pub pd: ProjDecomp,
}

/// Factor dimensions at most 4; the kind cycles with the seed.
pub fn random_influence_instance(seed: u64) -> Result<InfluenceInstance> {
    let mut rng = Rng::derived(seed, 0x1f1e);
    let kind = [InstanceKind::Haar, InstanceKind::Product, InstanceKind::Controlled][(seed % 3) as usize];
    let a = 2 + rng.below(3);
    let b = if kind == InstanceKind::Haar { 1 + rng.below(2) } else { 2 };
    let n = a * b;
    let (c, d) = match kind {
        InstanceKind::Product | InstanceKind::Controlled => (a, b),
        InstanceKind::Haar => {
            let splits: Vec<(usize, usize)> = (1..=4).filter(|c| n % c == 0 && n / c >= 2 && n / c <= 4).map(|c| (c, n / c)).collect();
            splits[rng.below(splits.len())]
        }
    };
    let pa = ProjDecomp::new(random_rank_partition(a, 1 + rng.below(a), &mut rng), 1e-9)?;
    let unitary = match kind {
        InstanceKind::Haar => haar_unitary_with(n, &mut rng),
        InstanceKind::Product => kron(&haar_unitary_with(a, &mut rng), &haar_unitary_with(b, &mut rng))?,
        InstanceKind::Controlled => block_unitary(&pa, b, &mut rng)?,
    };
    let parts = 1 + rng.below(d);
    let pd = ProjDecomp::new(random_rank_partition(d, parts, &mut rng), 1e-9)?;
    let channel = ChannelSplit::new(unitary, (a, b), (c, d), 1e-9)?;
    Ok(InfluenceInstance { kind, channel, pa, pd })
}

/// A Haar unitary inside the range of each `P ⊗ I_b`, so the result
/// commutes with every projector of `pa` on the first factor.
fn block_unitary(pa: &ProjDecomp, b: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    let n = pa.dim() * b;
    let mut out = ComplexMatrix::zeros(n, n);
    for p in pa.projectors() {
        let block = kron(p, &ComplexMatrix::identity(b))?;
        let range: Vec<Vec<crate::C64>> =
            herm_eig(&block, 1e-9)?.into_iter().filter(|e| e.value > 0.5).map(|e| e.vector).collect();
        let mut basis = ComplexMatrix::zeros(n, range.len());
        for (j, v) in range.iter().enumerate() {
            basis.set_col(j, v);
        }
        let w = haar_unitary_with(range.len(), rng);
        out = &out + &basis.matmul(&w).mul_adjoint(&basis);
    }
    Ok(out)
}
