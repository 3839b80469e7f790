//! Dense simulation: pushing the identity through gates to obtain circuit
//! unitaries and Heisenberg-picture operators.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Circuit, Placement, Topology};
use crate::linalg::{apply_on_factors, check_dim, permutation_index_map, ComplexMatrix, DimVector};
use crate::{Error, Result};

/// The circuit cut at some slice: the ordered frontier wires and the
/// isometry `v` mapping the input space onto the frontier space.
#[derive(Clone, Debug)]
pub struct Slice {
    pub wires: Vec<usize>,
    pub dims: DimVector,
    pub v: ComplexMatrix,
}

impl Slice {
    /// The input slice with the given wire order.
    pub fn initial(c: &Circuit, order: &[usize]) -> Result<Slice> {
        let dims = DimVector(order.iter().map(|&w| c.wires[w].dim).collect());
        check_dim(dims.total())?;
        Ok(Slice { wires: order.to_vec(), v: ComplexMatrix::identity(dims.total()), dims })
    }

    /// Apply every selected gate in topological order.
    pub fn advance(&mut self, c: &Circuit, top: &Topology, mask: &[bool]) -> Result<()> {
        for &g in &top.gate_order {
            if mask[g] {
                self.apply_gate(c, top, g)?;
            }
        }
        Ok(())
    }

    /// Bring the frontier into `order` by an explicit factor permutation.
    pub fn reorder(&mut self, order: &[usize]) -> Result<()> {
        let perm: Vec<usize> = order
            .iter()
            .map(|w| self.position(*w))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidArgument("reorder target is not the frontier".into()))?;
        if perm.len() != self.wires.len() {
            return Err(Error::InvalidArgument("reorder target is not the frontier".into()));
        }
        let map = permutation_index_map(&self.dims, &perm);
        self.v = self.v.select_rows(&map);
        self.dims = DimVector(perm.iter().map(|&p| self.dims.0[p]).collect());
        self.wires = order.to_vec();
        Ok(())
    }

    pub fn position(&self, w: usize) -> Option<usize> {
        self.wires.iter().position(|&x| x == w)
    }

    fn apply_gate(&mut self, c: &Circuit, top: &Topology, g: usize) -> Result<()> {
        let ins = &top.gate_inputs[g];
        let mut order: Vec<usize> = ins.clone();
        for &w in &self.wires {
            if !ins.contains(&w) {
                order.push(w);
            }
        }
        if order.len() != self.wires.len() {
            return Err(Error::InvalidArgument(format!(
                "gate `{}` applied before its inputs exist",
                c.gates[g].id
            )));
        }
        self.reorder(&order)?;
        let dg: usize = ins.iter().map(|&w| c.wires[w].dim).product();
        let rest = self.v.rows() / dg;
        self.v = apply_on_factors(&self.v, &DimVector(alloc::vec![dg, rest]), &[0], &c.gates[g].matrix)?;
        let mut wires = top.gate_outputs[g].clone();
        wires.extend_from_slice(&order[ins.len()..]);
        self.dims = DimVector(wires.iter().map(|&w| c.wires[w].dim).collect());
        self.wires = wires;
        Ok(())
    }

    /// Heisenberg image `v† (op on wire w) v` of an operator on a frontier wire.
    pub fn pull_back(&self, op: &ComplexMatrix, w: usize) -> Result<ComplexMatrix> {
        let k = self.position(w).ok_or_else(|| Error::InvalidArgument("wire not on this slice".into()))?;
        let moved = apply_on_factors(&self.v, &self.dims, &[k], op)?;
        Ok(self.v.adjoint_mul(&moved))
    }

    /// Schrödinger image `v X v†` of an input-frame operator on this slice.
    pub fn push_forward(&self, x: &ComplexMatrix) -> ComplexMatrix {
        x.conjugate_by(&self.v)
    }
}

fn resolve(c: &Circuit, top: &Topology, ids: &[String], expected: &[usize], what: &str) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let &w = top.wire_index.get(id).ok_or_else(|| Error::UnknownWire(id.clone()))?;
        out.push(w);
    }
    let mut a = out.clone();
    a.sort_unstable();
    a.dedup();
    let mut b = expected.to_vec();
    b.sort_unstable();
    if a != b || out.len() != expected.len() {
        let names: Vec<&str> = expected.iter().map(|&w| c.wires[w].id.as_str()).collect();
        return Err(Error::InvalidArgument(format!("{what} must be a permutation of {names:?}")));
    }
    Ok(out)
}

pub(super) fn unitary_between(
    c: &Circuit,
    top: &Topology,
    inputs: &[String],
    outputs: &[String],
) -> Result<ComplexMatrix> {
    let ins = resolve(c, top, inputs, &top.inputs, "input order")?;
    let outs = resolve(c, top, outputs, &top.outputs, "output order")?;
    let mut s = Slice::initial(c, &ins)?;
    s.advance(c, top, &alloc::vec![true; top.num_gates()])?;
    s.reorder(&outs)?;
    Ok(s.v)
}

/// Operator `op` at a placement, conjugated back to the input slice (inputs
/// in declaration order). IN and OUT placements on one wire embed to the
/// same operator; the side only matters for ordering products.
pub fn heisenberg_embed(c: &Circuit, op: &ComplexMatrix, at: &Placement) -> Result<ComplexMatrix> {
    let top = c.topology()?;
    Embedder::new(c, &top).embed(op, &at.wire)
}

/// Caches the slice of each wire so that many operators can be embedded.
pub struct Embedder<'a> {
    circuit: &'a Circuit,
    top: &'a Topology,
    slices: BTreeMap<usize, Slice>,
}

impl<'a> Embedder<'a> {
    pub fn new(circuit: &'a Circuit, top: &'a Topology) -> Self {
        Embedder { circuit, top, slices: BTreeMap::new() }
    }

    pub fn input_dim(&self) -> usize {
        self.top.inputs.iter().map(|&w| self.circuit.wires[w].dim).product()
    }

    /// The slice right after `wire` is produced.
    pub fn slice(&mut self, wire: &str) -> Result<&Slice> {
        let &w = self.top.wire_index.get(wire).ok_or_else(|| Error::UnknownWire(String::from(wire)))?;
        if !self.slices.contains_key(&w) {
            let mut s = Slice::initial(self.circuit, &self.top.inputs)?;
            s.advance(self.circuit, self.top, &self.top.wire_ancestors(w))?;
            self.slices.insert(w, s);
        }
        Ok(&self.slices[&w])
    }

    pub fn embed(&mut self, op: &ComplexMatrix, wire: &str) -> Result<ComplexMatrix> {
        let dim = self.circuit.wire_dim(wire)?;
        if op.rows() != dim || op.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "operator of size {}x{} placed on wire `{wire}` of dim {dim}",
                op.rows(),
                op.cols()
            )));
        }
        let w = self.top.wire_index[wire];
        self.slice(wire)?;
        self.slices[&w].pull_back(op, w)
    }
}
