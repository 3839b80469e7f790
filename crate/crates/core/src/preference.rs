//! Preferred decompositions and the preferred set of a bubble.
//!
//! The decomposition of an input `A` preferred by an output `D` of a channel
//! `A ⊗ B → C ⊗ D` spans the centre of the algebra of operators `M` on `A`
//! whose forward image `𝒰(M ⊗ I_B)𝒰†` acts trivially on `D`.
//!
//! For a bubble, each cut wire only needs the part of the circuit inside its
//! light cone: the OUT decomposition of wire `k` is computed on the gates
//! downstream of the cut, the IN decomposition on the gates upstream of it
//! (run backwards). Gates outside the cone commute with the relevant
//! operators and drop out.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::algebra::{central_decomposition, commuting_part, AlgebraBasis, ProjDecomp};
use crate::circuit::{lower_half, upper_half, Bubble, Circuit, Endpoint, Placement, Side};
use crate::influence::{influence_graph, ChannelSplit, InfluenceGraph, PlacedDecomp};
use crate::linalg::{embed, nullspace_stacked, orthonormalize, partial_trace, ComplexMatrix, DimVector};
use crate::{Error, Result};

const STRIP_TOL: f64 = 1e-7;
const SEED_RETRIES: u64 = 4;

/// Algebra of operators `M` on `A` with `𝒰(M ⊗ I_B)𝒰† ∈ L(C) ⊗ I_D`.
pub fn no_influence_algebra(ch: &ChannelSplit, tol: f64) -> Result<AlgebraBasis> {
    let (a, b, d) = (ch.a, ch.b, ch.d);
    let n = ch.unitary.rows();
    let dims = DimVector(alloc::vec![ch.c, d]);
    let blocks: Vec<ComplexMatrix> = (0..a).map(|i| ch.unitary.columns(i * b, (i + 1) * b)).collect();
    let mut map = ComplexMatrix::zeros(n * n, a * a);
    for i in 0..a {
        for j in 0..a {
            let t = blocks[i].mul_adjoint(&blocks[j]);
            let reduced = partial_trace(&t, &dims, &[0])?.scale_real(1.0 / d as f64);
            let defect = &t - &embed(&reduced, &dims, &[0])?;
            map.set_col(i * a + j, defect.data());
        }
    }
    let null = nullspace_stacked([map], a * a, tol, b as f64);
    let mats: Vec<ComplexMatrix> =
        null.iter().map(|v| ComplexMatrix::from_vec(a, a, v.clone()).expect("square")).collect();
    Ok(AlgebraBasis::from_basis(orthonormalize(&mats, tol), tol))
}

/// Largest deviation of `𝒰(P ⊗ I_B)𝒰†` from the form `X_C ⊗ I_D`.
pub fn output_triviality_defect(ch: &ChannelSplit, p: &ComplexMatrix) -> Result<f64> {
    let dims = DimVector(alloc::vec![ch.c, ch.d]);
    let lifted = embed(p, &DimVector(alloc::vec![ch.a, ch.b]), &[0])?.conjugate_by(&ch.unitary);
    let reduced = partial_trace(&lifted, &dims, &[0])?.scale_real(1.0 / ch.d as f64);
    Ok(lifted.max_diff(&embed(&reduced, &dims, &[0])?))
}

/// The decomposition of `A` preferred by `D` under the channel.
pub fn preferred_decomposition(ch: &ChannelSplit, tol: f64, seed: u64) -> Result<ProjDecomp> {
    let algebra = no_influence_algebra(ch, tol)?;
    let centre = AlgebraBasis::from_basis(commuting_part(algebra.basis(), algebra.elements(), tol), tol);
    let mut last_defect = 0.0;
    for retry in 0..SEED_RETRIES {
        let decomp = central_decomposition(&centre, tol, seed.wrapping_add(retry))?;
        last_defect = decomp
            .projectors()
            .iter()
            .map(|p| output_triviality_defect(ch, p))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if last_defect <= STRIP_TOL {
            return Ok(decomp);
        }
    }
    Err(Error::NumericDefect(format!("preferred projectors still influence the output (defect {last_defect:e})")))
}

/// The `2n` preferred decompositions of a bubble, IN before OUT per wire,
/// wires in temporal order.
#[derive(Clone, Debug)]
pub struct PreferredSet {
    pub bubble: Bubble,
    pub entries: Vec<PlacedDecomp>,
}

impl PreferredSet {
    pub fn entry(&self, wire: &str, side: Side) -> Option<&PlacedDecomp> {
        self.entries.iter().find(|e| e.at.wire == wire && e.at.side == side)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest pairwise distance to another preferred set of the same bubble.
    pub fn distance(&self, other: &PreferredSet) -> f64 {
        if self.entries.len() != other.entries.len() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| if a.at == b.at { a.decomp.distance(&b.decomp) } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }
}

/// Light-cone channel for one side of one cut wire, with the output factor
/// `D` made of the cut halves listed in `targets` (all other cut halves of
/// the opposite kind when `None`).
fn cone_channel(c: &Circuit, b: &Bubble, wire: &str, side: Side, targets: Option<&[String]>) -> Result<Option<ChannelSplit>> {
    let broken = crate::circuit::cut::rewire(c, b)?;
    let top = broken.topology()?;
    let (start, target_of): (String, fn(&str) -> String) = match side {
        Side::Out => (upper_half(wire), lower_half),
        Side::In => (lower_half(wire), upper_half),
    };
    let target_ids: Vec<String> = match targets {
        Some(t) => t.iter().map(|w| target_of(w)).collect(),
        None => b.wires().iter().map(|w| target_of(w)).collect(),
    };
    let s = top.wire_index[&start];
    let endpoint = if side == Side::Out { top.sink[s] } else { top.source[s] };
    let Endpoint::Gate(g) = endpoint else {
        return Ok(None);
    };
    let mask = if side == Side::Out { top.descendants(g) } else { top.ancestors(g) };
    let region = broken.subcircuit(&top, &mask, &[s]);
    let rtop = region.topology()?;
    let ids = |ws: &[usize]| -> Vec<String> { ws.iter().map(|&w| region.wires[w].id.clone()).collect() };
    let (near, far) = if side == Side::Out { (ids(&rtop.inputs), ids(&rtop.outputs)) } else { (ids(&rtop.outputs), ids(&rtop.inputs)) };
    let mut a_side = alloc::vec![start.clone()];
    a_side.extend(near.iter().filter(|w| **w != start).cloned());
    let d_part: Vec<String> = target_ids.iter().filter(|t| far.contains(t)).cloned().collect();
    if d_part.is_empty() {
        return Ok(None);
    }
    let mut c_side: Vec<String> = far.iter().filter(|w| !d_part.contains(w)).cloned().collect();
    c_side.extend(d_part.iter().cloned());
    let dim = |ws: &[String]| -> Result<usize> { ws.iter().map(|w| region.wire_dim(w)).product() };
    let da = region.wire_dim(&start)?;
    let db = dim(&a_side[1..])?;
    let dd = dim(&d_part)?;
    let dc = dim(&c_side[..c_side.len() - d_part.len()])?;
    let unitary = if side == Side::Out {
        region.unitary_between(&a_side, &c_side)?
    } else {
        region.unitary_between(&c_side, &a_side)?.adjoint()
    };
    Ok(Some(ChannelSplit { unitary, a: da, b: db, c: dc, d: dd }))
}

/// Decomposition preferred at one side of one cut wire. `targets` restricts
/// the preferring output to the cut halves of the listed bubble wires.
pub fn preferred_on_wire(
    c: &Circuit,
    b: &Bubble,
    wire: &str,
    side: Side,
    targets: Option<&[String]>,
    tol: f64,
    seed: u64,
) -> Result<ProjDecomp> {
    if !b.contains(wire) {
        return Err(Error::InvalidBubble(format!("wire `{wire}` is not in the bubble")));
    }
    match cone_channel(c, b, wire, side, targets)? {
        Some(ch) => preferred_decomposition(&ch, tol, seed),
        None => Ok(ProjDecomp::trivial(c.wire_dim(wire)?)),
    }
}

/// The preferred set of a bubble.
pub fn preferred_set(c: &Circuit, b: &Bubble, tol: f64, seed: u64) -> Result<PreferredSet> {
    c.topology()?;
    let mut entries = Vec::with_capacity(2 * b.len());
    for w in b.wires() {
        for side in [Side::In, Side::Out] {
            let decomp = preferred_on_wire(c, b, w, side, None, tol, seed)?;
            entries.push(PlacedDecomp::new(decomp, Placement::new(w.clone(), side)));
        }
    }
    Ok(PreferredSet { bubble: b.clone(), entries })
}

/// Influence edges of a preferred set that are not of the permitted form
/// "IN decomposition → later OUT decomposition".
#[derive(Clone, Debug)]
pub struct PatternReport {
    pub graph: InfluenceGraph,
    pub violations: Vec<(usize, usize)>,
}

impl PatternReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_influence_pattern(c: &Circuit, placed: &[PlacedDecomp], tol: f64) -> Result<PatternReport> {
    let graph = influence_graph(c, placed, tol)?;
    let violations = graph
        .influence_edges()
        .filter(|e| !(placed[e.from].at.side == Side::In && placed[e.to].at.side == Side::Out))
        .map(|e| (e.from, e.to))
        .collect();
    Ok(PatternReport { graph, violations })
}
