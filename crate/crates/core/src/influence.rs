//! Quantum and interference influences through unitary channels, the
//! phase-signalling detector, and influence graphs over placed decompositions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::ProjDecomp;
use crate::circuit::{Circuit, Embedder, Placement, Side, Topology};
use crate::linalg::{c64, embed, ComplexMatrix, DimVector};
use crate::rng::Rng;
use crate::{Error, Result};

/// A unitary channel `A ⊗ B → C ⊗ D`.
#[derive(Clone, Debug)]
pub struct ChannelSplit {
    pub unitary: ComplexMatrix,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFactor {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFactor {
    C,
    D,
}

impl ChannelSplit {
    pub fn new(unitary: ComplexMatrix, inputs: (usize, usize), outputs: (usize, usize), tol: f64) -> Result<Self> {
        let (a, b) = inputs;
        let (c, d) = outputs;
        let n = unitary.rows();
        if !unitary.is_square() || a * b != n || c * d != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} unitary split as ({a}, {b}) -> ({c}, {d})",
                unitary.rows(),
                unitary.cols()
            )));
        }
        let dev = unitary.unitarity_deviation();
        if dev > tol.max(1e-9) {
            return Err(Error::InvalidArgument(format!("channel is not unitary (deviation {dev:e})")));
        }
        Ok(ChannelSplit { unitary, a, b, c, d })
    }

    /// The same channel run backwards: `𝒰†: C ⊗ D → A ⊗ B`.
    pub fn reversed(&self) -> ChannelSplit {
        ChannelSplit { unitary: self.unitary.adjoint(), a: self.c, b: self.d, c: self.a, d: self.b }
    }

    fn input_dims(&self) -> DimVector {
        DimVector(vec![self.a, self.b])
    }

    fn output_dims(&self) -> DimVector {
        DimVector(vec![self.c, self.d])
    }

    /// `M` on an input factor, identity on the other.
    pub fn input_operator(&self, m: &ComplexMatrix, at: InputFactor) -> Result<ComplexMatrix> {
        let pos = match at {
            InputFactor::A => 0,
            InputFactor::B => 1,
        };
        embed(m, &self.input_dims(), &[pos])
    }

    /// Heisenberg image `𝒰†(N on an output factor)𝒰`.
    pub fn output_operator(&self, n: &ComplexMatrix, at: OutputFactor) -> Result<ComplexMatrix> {
        let pos = match at {
            OutputFactor::C => 0,
            OutputFactor::D => 1,
        };
        Ok(embed(n, &self.output_dims(), &[pos])?.conjugate_by_adjoint(&self.unitary))
    }

    fn input_dim(&self, f: InputFactor) -> usize {
        match f {
            InputFactor::A => self.a,
            InputFactor::B => self.b,
        }
    }

    fn output_dim(&self, f: OutputFactor) -> usize {
        match f {
            OutputFactor::C => self.c,
            OutputFactor::D => self.d,
        }
    }
}

/// Outcome of an interference-influence test.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceCheck {
    pub present: bool,
    /// Largest commutator max-norm found.
    pub max_norm: f64,
    /// Projector indices `(i, j)` attaining `max_norm`.
    pub witness: Option<(usize, usize)>,
}

/// Whether an output factor depends on an input factor: some pair of
/// matrix units on the two factors fails to commute in the Heisenberg
/// picture.
pub fn quantum_influence(ch: &ChannelSplit, from: InputFactor, to: OutputFactor, tol: f64) -> Result<bool> {
    let din = ch.input_dim(from);
    let dout = ch.output_dim(to);
    let outs: Vec<ComplexMatrix> = (0..dout * dout)
        .map(|k| ch.output_operator(&ComplexMatrix::unit(dout, k / dout, k % dout), to))
        .collect::<Result<_>>()?;
    for k in 0..din * din {
        let m = ch.input_operator(&ComplexMatrix::unit(din, k / din, k % din), from)?;
        for n in &outs {
            if m.commutator(n).max_abs() > tol {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn check_decomp(p: &ProjDecomp, dim: usize, what: &str) -> Result<()> {
    if p.is_empty() || p.dim() != dim {
        return Err(Error::InvalidDecomposition(format!("{what} decomposition does not act on dimension {dim}")));
    }
    p.validate(1e-7)
}

/// Largest commutator between two families of operators.
pub fn max_commutator(left: &[ComplexMatrix], right: &[ComplexMatrix], tol: f64) -> InfluenceCheck {
    let mut best = InfluenceCheck { present: false, max_norm: 0.0, witness: None };
    for (i, p) in left.iter().enumerate() {
        for (j, q) in right.iter().enumerate() {
            let n = p.commutator(q).max_abs();
            if n > best.max_norm {
                best.max_norm = n;
                best.witness = Some((i, j));
            }
        }
    }
    best.present = best.max_norm > tol;
    if !best.present {
        best.witness = None;
    }
    best
}

/// Interference influence of `pa` (on A) on `pd` (on D): some Heisenberg
/// projectors `P_A^i ⊗ I_B` and `𝒰†(I_C ⊗ P_D^j)𝒰` fail to commute.
pub fn interference_influence(ch: &ChannelSplit, pa: &ProjDecomp, pd: &ProjDecomp, tol: f64) -> Result<InfluenceCheck> {
    check_decomp(pa, ch.a, "input")?;
    check_decomp(pd, ch.d, "output")?;
    let left: Vec<ComplexMatrix> =
        pa.projectors().iter().map(|p| ch.input_operator(p, InputFactor::A)).collect::<Result<_>>()?;
    let right: Vec<ComplexMatrix> =
        pd.projectors().iter().map(|p| ch.output_operator(p, OutputFactor::D)).collect::<Result<_>>()?;
    Ok(max_commutator(&left, &right, tol))
}

/// Phase vectors for [`phase_signal_oracle`]: a π flip on each projector
/// separately, followed by `random` uniformly random vectors.
pub fn standard_phase_grid(len: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut grid = Vec::with_capacity(len + random);
    for i in 0..len {
        let mut v = vec![0.0; len];
        v[i] = core::f64::consts::PI;
        grid.push(v);
    }
    let mut rng = Rng::derived(seed, 0x9a5e);
    for _ in 0..random {
        grid.push((0..len).map(|_| rng.phase()).collect());
    }
    grid
}

/// Informationally complete pure inputs: `|k⟩`, `(|k⟩+|l⟩)/√2` and
/// `(|k⟩+i|l⟩)/√2`.
fn probe_states(n: usize) -> Vec<Vec<crate::C64>> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut v = vec![c64(0.0, 0.0); n];
        v[k] = c64(1.0, 0.0);
        out.push(v);
    }
    for k in 0..n {
        for l in k + 1..n {
            let mut v = vec![c64(0.0, 0.0); n];
            v[k] = c64(s, 0.0);
            v[l] = c64(s, 0.0);
            out.push(v.clone());
            v[l] = c64(0.0, s);
            out.push(v);
        }
    }
    out
}

/// Operational detector: can an agent applying `V_φ = Σ e^{iφ_i} P_A^i ⊗ I_B`
/// before the channel change the statistics of `pd` for some input state?
/// The probe states span all density operators, so a change on some state
/// is a change on some basis state of the operator space.
pub fn phase_signal_oracle(
    ch: &ChannelSplit,
    pa: &ProjDecomp,
    pd: &ProjDecomp,
    phase_grid: &[Vec<f64>],
    tol: f64,
) -> Result<bool> {
    if phase_grid.is_empty() {
        return Err(Error::InvalidArgument("empty phase grid".into()));
    }
    check_decomp(pa, ch.a, "input")?;
    check_decomp(pd, ch.d, "output")?;
    let pa_full: Vec<ComplexMatrix> =
        pa.projectors().iter().map(|p| ch.input_operator(p, InputFactor::A)).collect::<Result<_>>()?;
    let outputs: Vec<ComplexMatrix> =
        pd.projectors().iter().map(|p| ch.output_operator(p, OutputFactor::D)).collect::<Result<_>>()?;
    let states = probe_states(ch.a * ch.b);
    let expect = |m: &ComplexMatrix, v: &[crate::C64]| -> f64 {
        let mv = m.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<crate::C64>().re
    };
    for phases in phase_grid {
        if phases.len() != pa.len() {
            return Err(Error::InvalidArgument("phase vector length differs from the decomposition size".into()));
        }
        let n = ch.a * ch.b;
        let mut v = ComplexMatrix::zeros(n, n);
        for (p, &phi) in pa_full.iter().zip(phases) {
            v.axpy(c64(libm::cos(phi), libm::sin(phi)), p);
        }
        for o in &outputs {
            let moved = o.conjugate_by_adjoint(&v);
            for s in &states {
                if (expect(&moved, s) - expect(o, s)).abs() > tol {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// A decomposition placed on a wire of a circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedDecomp {
    pub decomp: ProjDecomp,
    pub at: Placement,
}

impl PlacedDecomp {
    pub fn new(decomp: ProjDecomp, at: Placement) -> Self {
        PlacedDecomp { decomp, at }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceEdge {
    pub from: usize,
    pub to: usize,
    /// Whether some causal path leads from the earlier wire to the later one.
    pub connected: bool,
    pub influence: bool,
    pub max_norm: f64,
    pub witness: Option<(usize, usize)>,
}

/// Interference influences between every ordered pair of placed
/// decompositions.
#[derive(Clone, Debug)]
pub struct InfluenceGraph {
    pub nodes: Vec<PlacedDecomp>,
    pub edges: Vec<InfluenceEdge>,
}

impl InfluenceGraph {
    pub fn edge(&self, from: usize, to: usize) -> Option<&InfluenceEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    /// Influence between two nodes in whichever temporal direction exists.
    pub fn influences(&self, from: usize, to: usize) -> bool {
        self.edge(from, to).map(|e| e.influence).unwrap_or(false)
    }

    pub fn influence_edges(&self) -> impl Iterator<Item = &InfluenceEdge> {
        self.edges.iter().filter(|e| e.influence)
    }
}

/// Sort key placing IN before OUT on each wire and wires in temporal order.
pub(crate) fn temporal_key(top: &Topology, at: &Placement) -> Result<(usize, u8)> {
    let &w = top.wire_index.get(&at.wire).ok_or_else(|| Error::UnknownWire(at.wire.clone()))?;
    Ok((top.wire_rank[w], if at.side == Side::In { 0 } else { 1 }))
}

/// Indices of `placed` sorted into temporal order (stable for ties).
pub fn temporal_positions(c: &Circuit, placed: &[PlacedDecomp]) -> Result<Vec<usize>> {
    let top = c.topology()?;
    let keys: Vec<(usize, u8)> = placed.iter().map(|p| temporal_key(&top, &p.at)).collect::<Result<_>>()?;
    let mut idx: Vec<usize> = (0..placed.len()).collect();
    idx.sort_by_key(|&i| (keys[i], i));
    Ok(idx)
}

/// Heisenberg projectors of each placed decomposition, in input order.
pub fn heisenberg_projectors(c: &Circuit, placed: &[PlacedDecomp]) -> Result<Vec<Vec<ComplexMatrix>>> {
    let top = c.topology()?;
    let mut emb = Embedder::new(c, &top);
    placed
        .iter()
        .map(|p| {
            let dim = c.wire_dim(&p.at.wire)?;
            check_decomp(&p.decomp, dim, "placed")?;
            p.decomp.projectors().iter().map(|q| emb.embed(q, &p.at.wire)).collect()
        })
        .collect()
}

/// Interference influences between all ordered pairs of placed
/// decompositions; pairs without a causal path are recorded as `false`.
pub fn influence_graph(c: &Circuit, placed: &[PlacedDecomp], tol: f64) -> Result<InfluenceGraph> {
    let top = c.topology()?;
    let order = temporal_positions(c, placed)?;
    let heis = heisenberg_projectors(c, placed)?;
    let mut edges = Vec::new();
    for (x, &p) in order.iter().enumerate() {
        for &q in &order[x + 1..] {
            let wp = top.wire_index[&placed[p].at.wire];
            let wq = top.wire_index[&placed[q].at.wire];
            let connected = top.wire_precedes(wp, wq);
            let check = if connected {
                max_commutator(&heis[p], &heis[q], tol)
            } else {
                InfluenceCheck { present: false, max_norm: 0.0, witness: None }
            };
            edges.push(InfluenceEdge {
                from: p,
                to: q,
                connected,
                influence: check.present,
                max_norm: check.max_norm,
                witness: check.witness,
            });
        }
    }
    Ok(InfluenceGraph { nodes: placed.to_vec(), edges })
}
