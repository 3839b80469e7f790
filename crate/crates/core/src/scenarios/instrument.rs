//! Unitary dilations of quantum instruments and their circuit models.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::models::{shift_unitary, unitary_with_first_column};
use crate::circuit::{Bubble, Circuit, Gate, Placement, Side, Wire};
use crate::histories::history_distribution;
use crate::influence::PlacedDecomp;
use crate::linalg::{c64, kron, partial_trace, haar_unitary_with, ComplexMatrix, DimVector, C64};
use crate::preference::preferred_on_wire;
use crate::rng::Rng;
use crate::{Error, Result};

const COMPLETENESS_TOL: f64 = 1e-9;
const MATCH_TOL: f64 = 1e-7;

/// Completely positive maps `d_in → d_out`, one Kraus list per outcome,
/// jointly trace preserving.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    maps: Vec<Vec<ComplexMatrix>>,
    dim_in: usize,
    dim_out: usize,
}

impl Instrument {
    pub fn new(maps: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let first = maps
            .iter()
            .flat_map(|m| m.first())
            .next()
            .ok_or_else(|| Error::InvalidArgument("instrument has no Kraus operators".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
        for (i, m) in maps.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::InvalidArgument(format!("outcome {i} has no Kraus operators")));
            }
            for k in m {
                if k.rows() != dim_out || k.cols() != dim_in {
                    return Err(Error::DimensionMismatch(format!(
                        "Kraus operator of outcome {i} is {}x{}, expected {dim_out}x{dim_in}",
                        k.rows(),
                        k.cols()
                    )));
                }
                sum = &sum + &k.adjoint_mul(k);
            }
        }
        let dev = sum.max_diff(&ComplexMatrix::identity(dim_in));
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!("Kraus operators are not complete (deviation {dev:e})")));
        }
        Ok(Instrument { maps, dim_in, dim_out })
    }

    /// Projective measurement with the given projectors, no change of space.
    pub fn projective(projectors: &[ComplexMatrix]) -> Result<Self> {
        Self::new(projectors.iter().map(|p| vec![p.clone()]).collect())
    }

    /// One outcome, the unitary channel `ρ ↦ UρU†`.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::new(vec![vec![u.clone()]])
    }

    /// One outcome, discarding the input and preparing `rho` (`d_in → dim rho`).
    pub fn preparation(rho: &ComplexMatrix, dim_in: usize) -> Result<Self> {
        let eig = crate::linalg::herm_eig(rho, 1e-12)?;
        let mut kraus = Vec::new();
        for pair in eig {
            if pair.value <= 1e-14 {
                continue;
            }
            let amp = libm::sqrt(pair.value);
            for a in 0..dim_in {
                let mut k = ComplexMatrix::zeros(rho.rows(), dim_in);
                for (r, v) in pair.vector.iter().enumerate() {
                    k[(r, a)] = v * amp;
                }
                kraus.push(k);
            }
        }
        Self::new(vec![kraus])
    }

    /// Random instrument: the blocks of a Haar-random isometry
    /// `d_in → d_out · outcomes · kraus`.
    pub fn random(dim_in: usize, dim_out: usize, outcomes: usize, kraus: usize, seed: u64) -> Result<Self> {
        let big = dim_out * outcomes * kraus;
        if big < dim_in || outcomes == 0 || kraus == 0 {
            return Err(Error::InvalidArgument("instrument too small to be complete".into()));
        }
        let mut rng = Rng::new(seed);
        let u = haar_unitary_with(big, &mut rng);
        let maps = (0..outcomes)
            .map(|i| {
                (0..kraus)
                    .map(|k| ComplexMatrix::from_fn(dim_out, dim_in, |b, a| u[(((i * kraus) + k) * dim_out + b, a)]))
                    .collect()
            })
            .collect();
        Self::new(maps)
    }

    pub fn maps(&self) -> &[Vec<ComplexMatrix>] {
        &self.maps
    }

    pub fn outcomes(&self) -> usize {
        self.maps.len()
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn max_kraus(&self) -> usize {
        self.maps.iter().map(Vec::len).max().unwrap_or(1)
    }

    /// `C_i(rho)`.
    pub fn apply(&self, i: usize, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.maps[i] {
            out = &out + &k.matmul(rho).mul_adjoint(k);
        }
        out
    }
}

/// Unitary `U: A ⊗ X → B ⊗ Y ⊗ Z` and state `ψ` on `X` with
/// `C_i(ρ) = Tr_{YZ}((I ⊗ |i⟩⟨i| ⊗ I) U (ρ ⊗ ψψ†) U†)`.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub unitary: ComplexMatrix,
    pub psi: Vec<C64>,
    pub dim_in: usize,
    pub dim_ancilla: usize,
    pub dim_out: usize,
    pub dim_label: usize,
    pub dim_env: usize,
}

impl Dilation {
    /// The map reconstructed from the dilation for outcome `i`.
    pub fn reconstruct(&self, i: usize, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let state = kron(rho, &ComplexMatrix::outer(&self.psi))?;
        let evolved = state.conjugate_by(&self.unitary);
        let pointer = kron(
            &kron(&ComplexMatrix::identity(self.dim_out), &ComplexMatrix::basis_projector(self.dim_label, i))?,
            &ComplexMatrix::identity(self.dim_env),
        )?;
        let dims = DimVector(vec![self.dim_out, self.dim_label, self.dim_env]);
        partial_trace(&pointer.matmul(&evolved).matmul(&pointer), &dims, &[0])
    }

    /// Largest entry deviation of the reconstruction over matrix units.
    pub fn residual(&self, inst: &Instrument) -> Result<f64> {
        let d = inst.dim_in();
        let mut worst: f64 = 0.0;
        for i in 0..inst.outcomes() {
            for r in 0..d {
                for c in 0..d {
                    let unit = ComplexMatrix::unit(d, r, c);
                    worst = worst.max(self.reconstruct(i, &unit)?.max_diff(&inst.apply(i, &unit)));
                }
            }
        }
        Ok(worst)
    }
}

/// Columns fixed at the given indices, completed to a unitary.
fn complete_unitary(dim: usize, fixed: &[(usize, Vec<C64>)]) -> Result<ComplexMatrix> {
    let mut basis: Vec<Vec<C64>> = fixed.iter().map(|(_, v)| v.clone()).collect();
    let mut extra = Vec::new();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut e = vec![c64(0.0, 0.0); dim];
        e[k] = c64(1.0, 0.0);
        for _ in 0..2 {
            for q in &basis {
                let ip: C64 = q.iter().zip(&e).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in e.iter_mut().zip(q) {
                    *x -= ip * y;
                }
            }
        }
        let n = libm::sqrt(e.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if n > 1e-6 {
            let v: Vec<C64> = e.iter().map(|z| z / n).collect();
            basis.push(v.clone());
            extra.push(v);
        }
    }
    if basis.len() != dim {
        return Err(Error::NumericDefect("isometry completion lost rank".into()));
    }
    let mut u = ComplexMatrix::zeros(dim, dim);
    let mut free = extra.into_iter();
    for c in 0..dim {
        match fixed.iter().find(|(k, _)| *k == c) {
            Some((_, v)) => u.set_col(c, v),
            None => u.set_col(c, &free.next().ok_or_else(|| Error::NumericDefect("completion ran short".into()))?),
        }
    }
    Ok(u)
}

pub fn dilate_instrument(inst: &Instrument) -> Result<Dilation> {
    let (da, db, ni) = (inst.dim_in(), inst.dim_out(), inst.outcomes());
    let nk = inst.max_kraus();
    let mut nz = nk;
    while (db * ni * nz) % da != 0 {
        nz += 1;
    }
    let big = db * ni * nz;
    let dx = big / da;
    // Stinespring isometry J|a⟩ = Σ K_ik|a⟩ ⊗ |i⟩ ⊗ |k⟩.
    let mut fixed = Vec::with_capacity(da);
    for a in 0..da {
        let mut col = vec![c64(0.0, 0.0); big];
        for (i, m) in inst.maps().iter().enumerate() {
            for (k, kr) in m.iter().enumerate() {
                for b in 0..db {
                    col[(b * ni + i) * nz + k] = kr[(b, a)];
                }
            }
        }
        fixed.push((a * dx, col));
    }
    let u = complete_unitary(big, &fixed)?;
    let psi = vec![c64(1.0 / libm::sqrt(dx as f64), 0.0); dx];
    let w = unitary_with_first_column(&psi)?;
    let unitary = u.matmul(&kron(&ComplexMatrix::identity(da), &w.adjoint())?);
    Ok(Dilation { unitary, psi, dim_in: da, dim_ancilla: dx, dim_out: db, dim_label: ni, dim_env: nz })
}

/// One dilated instrument inside an [`InstrumentModel`].
#[derive(Clone, Debug)]
pub struct InstrumentStage {
    pub prefix: String,
    pub outcomes: usize,
    /// Ancilla preparation event: the preferred decomposition at the
    /// ancilla's IN side, and the index of its `ψψ†` projector.
    pub f: PlacedDecomp,
    pub f_index: usize,
    /// Outcome event at the label wire's OUT side; `g_map[i]` is the index
    /// of the projector onto label `|i⟩`.
    pub g: PlacedDecomp,
    pub g_map: Vec<usize>,
    pub input_wire: String,
    pub output_wire: String,
}

/// Circuit model of one or more instruments with their shared bubble.
#[derive(Clone, Debug)]
pub struct InstrumentModel {
    pub circuit: Circuit,
    pub bubble: Bubble,
    pub stages: Vec<InstrumentStage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Composition {
    /// The second model's input is the first model's output.
    Sequential,
    /// Side by side.
    Parallel,
}

fn gate(id: String, inputs: &[&String], outputs: &[&String], matrix: ComplexMatrix) -> Gate {
    Gate {
        id,
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        matrix,
    }
}

/// Builds the dilation circuit with every wire name prefixed by `prefix`.
///
/// Ancilla `x1` and record `k1` enter an inverse controlled shift, `W`
/// rotates `|0⟩` to `ψ`, the dilation acts on input `a` and ancilla `x3`,
/// and the label `y` is copied into record `k2` by a controlled shift.
/// The bubble is `{k1, x3, y, k2o}`.
pub fn build_instrument_model(inst: &Instrument, prefix: &str) -> Result<InstrumentModel> {
    let dil = dilate_instrument(inst)?;
    let n = |s: &str| format!("{prefix}{s}");
    let [a, x1, k1, x2, k1o, x3, b, y, z, yc, k2, k2o] =
        ["a", "x1", "k1", "x2", "k1o", "x3", "b", "y", "z", "yc", "k2", "k2o"].map(n);
    let (dx, ni) = (dil.dim_ancilla, dil.dim_label);
    let wires = [
        (&a, dil.dim_in),
        (&x1, dx),
        (&k1, dx),
        (&x2, dx),
        (&k1o, dx),
        (&x3, dx),
        (&b, dil.dim_out),
        (&y, ni),
        (&z, dil.dim_env),
        (&yc, ni),
        (&k2, ni),
        (&k2o, ni),
    ]
    .iter()
    .map(|(id, dim)| Wire { id: (*id).clone(), dim: *dim })
    .collect();
    let w = unitary_with_first_column(&dil.psi)?;
    let gates = vec![
        gate(n("Vd"), &[&x1, &k1], &[&x2, &k1o], shift_unitary(dx).adjoint()),
        gate(n("W"), &[&x2], &[&x3], w),
        gate(n("U"), &[&a, &x3], &[&b, &y, &z], dil.unitary.clone()),
        gate(n("V"), &[&y, &k2], &[&yc, &k2o], shift_unitary(ni)),
    ];
    let circuit = Circuit::new(wires, gates);
    let diags = circuit.validate();
    if !diags.is_empty() {
        return Err(Error::InvalidCircuit(diags));
    }
    let bubble = Bubble::from_ids(&circuit, vec![k1.clone(), x3.clone(), y.clone(), k2o.clone()])?;
    let stage = locate_stage(&circuit, &bubble, prefix, inst.outcomes(), &dil.psi)?;
    Ok(InstrumentModel { circuit, bubble, stages: vec![stage] })
}

fn locate_stage(c: &Circuit, b: &Bubble, prefix: &str, outcomes: usize, psi: &[C64]) -> Result<InstrumentStage> {
    let x3 = format!("{prefix}x3");
    let y = format!("{prefix}y");
    let fd = preferred_on_wire(c, b, &x3, Side::In, None, 1e-9, 0)?;
    let target = ComplexMatrix::outer(psi);
    let f_index = fd
        .projectors()
        .iter()
        .position(|p| p.max_diff(&target) < MATCH_TOL)
        .ok_or_else(|| Error::NumericDefect(format!("ancilla decomposition of `{x3}` lacks the ψ projector")))?;
    let gd = preferred_on_wire(c, b, &y, Side::Out, None, 1e-9, 0)?;
    let g_map = (0..outcomes)
        .map(|i| {
            let target = ComplexMatrix::basis_projector(outcomes, i);
            gd.projectors()
                .iter()
                .position(|p| p.max_diff(&target) < MATCH_TOL)
                .ok_or_else(|| Error::NumericDefect(format!("label decomposition of `{y}` lacks outcome {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InstrumentStage {
        prefix: prefix.to_string(),
        outcomes,
        f: PlacedDecomp::new(fd, Placement::input(x3)),
        f_index,
        g: PlacedDecomp::new(gd, Placement::output(y)),
        g_map,
        input_wire: format!("{prefix}a"),
        output_wire: format!("{prefix}b"),
    })
}

fn rename(id: &str, from: &str, to: &str) -> String {
    if id == from {
        to.to_string()
    } else {
        id.to_string()
    }
}

/// Joins two models. Sequential composition feeds the first model's output
/// wire into the second model's input; wire prefixes must differ.
pub fn compose_instruments(m1: &InstrumentModel, m2: &InstrumentModel, mode: Composition) -> Result<InstrumentModel> {
    for w in &m2.circuit.wires {
        if m1.circuit.wire(&w.id).is_some() {
            return Err(Error::InvalidArgument(format!("models share wire `{}`; use distinct prefixes", w.id)));
        }
    }
    let (from, to) = match mode {
        Composition::Sequential => {
            let out = &m1.stages.last().ok_or_else(|| Error::InvalidArgument("empty model".into()))?.output_wire;
            let inp = &m2.stages.first().ok_or_else(|| Error::InvalidArgument("empty model".into()))?.input_wire;
            let (d_out, d_in) = (m1.circuit.wire_dim(out)?, m2.circuit.wire_dim(inp)?);
            if d_out != d_in {
                return Err(Error::DimensionMismatch(format!("output `{out}` has dimension {d_out}, input `{inp}` has {d_in}")));
            }
            (inp.clone(), out.clone())
        }
        Composition::Parallel => (String::new(), String::new()),
    };
    let mut wires = m1.circuit.wires.clone();
    wires.extend(m2.circuit.wires.iter().filter(|w| w.id != from || from.is_empty()).cloned());
    let mut gates = m1.circuit.gates.clone();
    gates.extend(m2.circuit.gates.iter().map(|g| Gate {
        id: g.id.clone(),
        inputs: g.inputs.iter().map(|w| rename(w, &from, &to)).collect(),
        outputs: g.outputs.iter().map(|w| rename(w, &from, &to)).collect(),
        matrix: g.matrix.clone(),
    }));
    let circuit = Circuit::new(wires, gates);
    let diags = circuit.validate();
    if !diags.is_empty() {
        return Err(Error::InvalidCircuit(diags));
    }
    let mut ids: Vec<String> = m1.bubble.wires().to_vec();
    ids.extend(m2.bubble.wires().iter().map(|w| rename(w, &from, &to)));
    let bubble = Bubble::from_ids(&circuit, ids)?;
    let mut stages = m1.stages.clone();
    stages.extend(m2.stages.iter().cloned().map(|mut s| {
        s.input_wire = rename(&s.input_wire, &from, &to);
        s
    }));
    Ok(InstrumentModel { circuit, bubble, stages })
}

/// `p(g_1, …, g_n | f_1 = … = f_n = ψ)` in lexicographic order of the
/// stage outcomes.
pub fn instrument_conditionals(model: &InstrumentModel) -> Result<Vec<f64>> {
    let mut placed = Vec::new();
    for s in &model.stages {
        placed.push(s.f.clone());
        placed.push(s.g.clone());
    }
    let dist = history_distribution(&model.circuit, &placed)?;
    let pos = |p: &PlacedDecomp| {
        dist.position(&p.at.wire, p.at.side)
            .ok_or_else(|| Error::NumericDefect(format!("placement `{}` missing from the table", p.at.wire)))
    };
    let mut given = Vec::new();
    for s in &model.stages {
        given.push((pos(&s.f)?, s.f_index));
    }
    let cond = dist.conditional(&given)?;
    let sizes: Vec<usize> = model.stages.iter().map(|s| s.outcomes).collect();
    let total: usize = sizes.iter().product();
    let g_pos: Vec<usize> = model.stages.iter().map(|s| pos(&s.g)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut event = vec![(0, 0); sizes.len()];
        for k in (0..sizes.len()).rev() {
            let o = rem % sizes[k];
            rem /= sizes[k];
            event[k] = (g_pos[k], model.stages[k].g_map[o]);
        }
        out.push(cond.event_probability(&event)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_pvm() -> Instrument {
        Instrument::projective(&[ComplexMatrix::basis_projector(2, 0), ComplexMatrix::basis_projector(2, 1)]).unwrap()
    }

    #[test]
    fn rejects_incomplete_instrument() {
        assert!(Instrument::new(vec![vec![ComplexMatrix::basis_projector(2, 0)]]).is_err());
    }

    #[test]
    fn dilation_reconstructs_maps() {
        let inst = z_pvm();
        assert!(dilate_instrument(&inst).unwrap().residual(&inst).unwrap() < 1e-9);
        let inst = Instrument::random(2, 2, 2, 2, 11).unwrap();
        let d = dilate_instrument(&inst).unwrap();
        assert!(d.unitary.unitarity_deviation() < 1e-10);
        assert!(d.residual(&inst).unwrap() < 1e-9);
        let u = crate::linalg::haar_random_unitary(2, 5);
        let d = dilate_instrument(&Instrument::unitary(&u).unwrap()).unwrap();
        assert_eq!(d.dim_label, 1);
    }

    #[test]
    fn pvm_model_gives_uniform_outcomes() {
        let m = build_instrument_model(&z_pvm(), "").unwrap();
        let p = instrument_conditionals(&m).unwrap();
        assert!(p.iter().all(|x| (x - 0.5).abs() < 1e-9), "{p:?}");
    }

    #[test]
    fn parallel_pvms_are_independent() {
        let m1 = build_instrument_model(&z_pvm(), "l").unwrap();
        let m2 = build_instrument_model(&z_pvm(), "r").unwrap();
        let m = compose_instruments(&m1, &m2, Composition::Parallel).unwrap();
        let p = instrument_conditionals(&m).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-9), "{p:?}");
    }
}
