//! Unitary circuits over dimension-labelled wires.
//!
//! A wire is produced by at most one gate and consumed by at most one gate;
//! a wire without a producing gate is a boundary input and a wire without a
//! consuming gate is a boundary output. Boundary inputs and outputs are
//! ordered by their position in the wire list.

pub(crate) mod cut;
mod sim;

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;

pub use cut::{cut_bubble, lower_half, upper_half, SingleShotChannel};
pub use sim::{heisenberg_embed, Embedder, Slice};

use crate::linalg::ComplexMatrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Wire {
    pub id: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub id: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub matrix: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub wires: Vec<Wire>,
    pub gates: Vec<Gate>,
}

/// Where a wire starts or ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Boundary,
    Gate(usize),
}

/// One problem found by [`Circuit::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    DuplicateWire { wire: String },
    DuplicateGate { gate: String },
    ZeroDimension { wire: String },
    DanglingWire { gate: String, wire: String },
    RepeatedWire { gate: String, wire: String },
    MultipleSources { wire: String, gates: Vec<String> },
    MultipleSinks { wire: String, gates: Vec<String> },
    DimMismatch { gate: String, detail: String },
    NonUnitary { gate: String, deviation: f64 },
    Cycle { gates: Vec<String> },
}

impl Diagnostic {
    pub fn kind(&self) -> &'static str {
        match self {
            Diagnostic::DuplicateWire { .. } => "duplicate_wire",
            Diagnostic::DuplicateGate { .. } => "duplicate_gate",
            Diagnostic::ZeroDimension { .. } => "zero_dimension",
            Diagnostic::DanglingWire { .. } => "dangling_wire",
            Diagnostic::RepeatedWire { .. } => "repeated_wire",
            Diagnostic::MultipleSources { .. } => "multiple_sources",
            Diagnostic::MultipleSinks { .. } => "multiple_sinks",
            Diagnostic::DimMismatch { .. } => "dim_mismatch",
            Diagnostic::NonUnitary { .. } => "non_unitary",
            Diagnostic::Cycle { .. } => "cycle",
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateWire { wire } => write!(f, "wire `{wire}` declared more than once"),
            Diagnostic::DuplicateGate { gate } => write!(f, "gate `{gate}` declared more than once"),
            Diagnostic::ZeroDimension { wire } => write!(f, "wire `{wire}` has dimension 0"),
            Diagnostic::DanglingWire { gate, wire } => {
                write!(f, "gate `{gate}` references undeclared wire `{wire}`")
            }
            Diagnostic::RepeatedWire { gate, wire } => {
                write!(f, "gate `{gate}` lists wire `{wire}` more than once")
            }
            Diagnostic::MultipleSources { wire, gates } => {
                write!(f, "wire `{wire}` is produced by several gates: {}", gates.join(", "))
            }
            Diagnostic::MultipleSinks { wire, gates } => {
                write!(f, "wire `{wire}` is consumed by several gates: {}", gates.join(", "))
            }
            Diagnostic::DimMismatch { gate, detail } => write!(f, "gate `{gate}`: {detail}"),
            Diagnostic::NonUnitary { gate, deviation } => {
                write!(f, "gate `{gate}` is not unitary (deviation {deviation:e})")
            }
            Diagnostic::Cycle { gates } => write!(f, "gates form a cycle: {}", gates.join(", ")),
        }
    }
}

/// IN sits just before a wire's cut point, OUT just after.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    In,
    Out,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::In => "in",
            Side::Out => "out",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Placement {
    pub wire: String,
    pub side: Side,
}

impl Placement {
    pub fn new(wire: impl Into<String>, side: Side) -> Self {
        Placement { wire: wire.into(), side }
    }
    pub fn input(wire: impl Into<String>) -> Self {
        Self::new(wire, Side::In)
    }
    pub fn output(wire: impl Into<String>) -> Self {
        Self::new(wire, Side::Out)
    }
}

/// Distinct circuit wires sorted by [`Circuit::temporal_order`].
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Bubble {
    wires: Vec<String>,
}

impl Bubble {
    pub fn new(circuit: &Circuit, ids: &[&str]) -> Result<Self> {
        let owned: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
        Self::from_ids(circuit, owned)
    }

    pub fn from_ids(circuit: &Circuit, ids: Vec<String>) -> Result<Self> {
        let top = circuit.topology()?;
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !top.wire_index.contains_key(id) {
                return Err(Error::UnknownWire(id.clone()));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::InvalidBubble(format!("wire `{id}` listed twice")));
            }
        }
        let mut wires = ids;
        wires.sort_by_key(|id| top.wire_rank[top.wire_index[id]]);
        Ok(Bubble { wires })
    }

    pub fn empty() -> Self {
        Bubble::default()
    }

    pub fn wires(&self) -> &[String] {
        &self.wires
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.wires.iter().any(|w| w == id)
    }
}

/// Resolved connectivity of a valid circuit.
#[derive(Clone, Debug)]
pub struct Topology {
    pub wire_index: BTreeMap<String, usize>,
    pub source: Vec<Endpoint>,
    pub sink: Vec<Endpoint>,
    pub gate_inputs: Vec<Vec<usize>>,
    pub gate_outputs: Vec<Vec<usize>>,
    /// Gates in a topological order (ties broken by gate id).
    pub gate_order: Vec<usize>,
    /// Wires in temporal order.
    pub wire_order: Vec<usize>,
    /// Position of each wire in `wire_order`.
    pub wire_rank: Vec<usize>,
    /// Boundary inputs in declaration order.
    pub inputs: Vec<usize>,
    /// Boundary outputs in declaration order.
    pub outputs: Vec<usize>,
}

impl Topology {
    /// Gates from which `g` can be reached, including `g`.
    pub fn ancestors(&self, g: usize) -> Vec<bool> {
        let mut mark = vec![false; self.gate_inputs.len()];
        let mut stack = vec![g];
        while let Some(x) = stack.pop() {
            if mark[x] {
                continue;
            }
            mark[x] = true;
            for &w in &self.gate_inputs[x] {
                if let Endpoint::Gate(p) = self.source[w] {
                    stack.push(p);
                }
            }
        }
        mark
    }

    /// Gates reachable from `g`, including `g`.
    pub fn descendants(&self, g: usize) -> Vec<bool> {
        let mut mark = vec![false; self.gate_inputs.len()];
        let mut stack = vec![g];
        while let Some(x) = stack.pop() {
            if mark[x] {
                continue;
            }
            mark[x] = true;
            for &w in &self.gate_outputs[x] {
                if let Endpoint::Gate(s) = self.sink[w] {
                    stack.push(s);
                }
            }
        }
        mark
    }

    /// Gates that must act before wire `w` exists.
    pub fn wire_ancestors(&self, w: usize) -> Vec<bool> {
        match self.source[w] {
            Endpoint::Gate(g) => self.ancestors(g),
            Endpoint::Boundary => vec![false; self.gate_inputs.len()],
        }
    }

    /// `u ≼ v` in the causal order of wires.
    pub fn wire_precedes(&self, u: usize, v: usize) -> bool {
        if u == v {
            return true;
        }
        match (self.sink[u], self.source[v]) {
            (Endpoint::Gate(a), Endpoint::Gate(b)) => self.ancestors(b)[a],
            _ => false,
        }
    }

    pub fn num_gates(&self) -> usize {
        self.gate_inputs.len()
    }
}

impl Circuit {
    pub fn new(wires: Vec<Wire>, gates: Vec<Gate>) -> Self {
        Circuit { wires, gates }
    }

    pub fn wire(&self, id: &str) -> Option<&Wire> {
        self.wires.iter().find(|w| w.id == id)
    }

    pub fn wire_dim(&self, id: &str) -> Result<usize> {
        self.wire(id).map(|w| w.dim).ok_or_else(|| Error::UnknownWire(id.to_string()))
    }

    pub fn gate(&self, id: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.id == id)
    }

    /// All violations of the circuit invariants; empty for a valid circuit.
    pub fn validate(&self) -> Vec<Diagnostic> {
        self.validate_with_tol(crate::DEFAULT_TOL)
    }

    pub fn validate_with_tol(&self, tol: f64) -> Vec<Diagnostic> {
        self.analyze(tol).err().unwrap_or_default()
    }

    /// Connectivity of a valid circuit, or the diagnostics.
    pub fn topology(&self) -> Result<Topology> {
        self.analyze(crate::DEFAULT_TOL).map_err(Error::InvalidCircuit)
    }

    fn analyze(&self, tol: f64) -> core::result::Result<Topology, Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let mut wire_index = BTreeMap::new();
        for (k, w) in self.wires.iter().enumerate() {
            if wire_index.insert(w.id.clone(), k).is_some() {
                diags.push(Diagnostic::DuplicateWire { wire: w.id.clone() });
            }
            if w.dim == 0 {
                diags.push(Diagnostic::ZeroDimension { wire: w.id.clone() });
            }
        }
        let mut gate_ids = BTreeSet::new();
        let nw = self.wires.len();
        let mut producers: Vec<Vec<usize>> = vec![Vec::new(); nw];
        let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); nw];
        let mut gate_inputs = Vec::with_capacity(self.gates.len());
        let mut gate_outputs = Vec::with_capacity(self.gates.len());
        for (gi, g) in self.gates.iter().enumerate() {
            if !gate_ids.insert(g.id.clone()) {
                diags.push(Diagnostic::DuplicateGate { gate: g.id.clone() });
            }
            let mut local = BTreeSet::new();
            let mut resolve = |ids: &[String], diags: &mut Vec<Diagnostic>| -> Vec<usize> {
                let mut out = Vec::new();
                for id in ids {
                    if !local.insert(id.clone()) {
                        diags.push(Diagnostic::RepeatedWire { gate: g.id.clone(), wire: id.clone() });
                    }
                    match wire_index.get(id) {
                        Some(&k) => out.push(k),
                        None => diags.push(Diagnostic::DanglingWire { gate: g.id.clone(), wire: id.clone() }),
                    }
                }
                out
            };
            let ins = resolve(&g.inputs, &mut diags);
            let outs = resolve(&g.outputs, &mut diags);
            for &k in &ins {
                consumers[k].push(gi);
            }
            for &k in &outs {
                producers[k].push(gi);
            }
            if ins.len() == g.inputs.len() && outs.len() == g.outputs.len() {
                let din: usize = ins.iter().map(|&k| self.wires[k].dim).product();
                let dout: usize = outs.iter().map(|&k| self.wires[k].dim).product();
                let m = &g.matrix;
                if !m.is_square() || m.rows() != din || din != dout {
                    diags.push(Diagnostic::DimMismatch {
                        gate: g.id.clone(),
                        detail: format!(
                            "input dims multiply to {din}, output dims to {dout}, matrix is {}x{}",
                            m.rows(),
                            m.cols()
                        ),
                    });
                } else {
                    let dev = m.unitarity_deviation();
                    if !(dev <= tol) {
                        diags.push(Diagnostic::NonUnitary { gate: g.id.clone(), deviation: dev });
                    }
                }
            }
            gate_inputs.push(ins);
            gate_outputs.push(outs);
        }
        let name = |gs: &[usize]| gs.iter().map(|&g| self.gates[g].id.clone()).collect::<Vec<_>>();
        for k in 0..nw {
            if producers[k].len() > 1 {
                diags.push(Diagnostic::MultipleSources { wire: self.wires[k].id.clone(), gates: name(&producers[k]) });
            }
            if consumers[k].len() > 1 {
                diags.push(Diagnostic::MultipleSinks { wire: self.wires[k].id.clone(), gates: name(&consumers[k]) });
            }
        }
        if !diags.is_empty() {
            return Err(diags);
        }
        let source: Vec<Endpoint> =
            producers.iter().map(|p| p.first().map_or(Endpoint::Boundary, |&g| Endpoint::Gate(g))).collect();
        let sink: Vec<Endpoint> =
            consumers.iter().map(|c| c.first().map_or(Endpoint::Boundary, |&g| Endpoint::Gate(g))).collect();

        // gate order: Kahn with smallest-id tie-break
        let ng = self.gates.len();
        let mut indeg = vec![0usize; ng];
        for (g, ins) in gate_inputs.iter().enumerate() {
            indeg[g] = ins.iter().filter(|&&w| matches!(source[w], Endpoint::Gate(_))).count();
        }
        let mut heap: BinaryHeap<Reverse<(&str, usize)>> = (0..ng)
            .filter(|&g| indeg[g] == 0)
            .map(|g| Reverse((self.gates[g].id.as_str(), g)))
            .collect();
        let mut gate_order = Vec::with_capacity(ng);
        while let Some(Reverse((_, g))) = heap.pop() {
            gate_order.push(g);
            for &w in &gate_outputs[g] {
                if let Endpoint::Gate(s) = sink[w] {
                    indeg[s] -= 1;
                    if indeg[s] == 0 {
                        heap.push(Reverse((self.gates[s].id.as_str(), s)));
                    }
                }
            }
        }
        if gate_order.len() < ng {
            let placed: BTreeSet<usize> = gate_order.iter().copied().collect();
            let stuck: Vec<usize> = (0..ng).filter(|g| !placed.contains(g)).collect();
            return Err(vec![Diagnostic::Cycle { gates: name(&stuck) }]);
        }

        // wire order: Kahn over the wire graph, smallest-id tie-break
        let mut windeg: Vec<usize> = (0..nw)
            .map(|w| match source[w] {
                Endpoint::Gate(g) => gate_inputs[g].len(),
                Endpoint::Boundary => 0,
            })
            .collect();
        let mut heap: BinaryHeap<Reverse<(&str, usize)>> = (0..nw)
            .filter(|&w| windeg[w] == 0)
            .map(|w| Reverse((self.wires[w].id.as_str(), w)))
            .collect();
        let mut wire_order = Vec::with_capacity(nw);
        while let Some(Reverse((_, w))) = heap.pop() {
            wire_order.push(w);
            if let Endpoint::Gate(g) = sink[w] {
                for &o in &gate_outputs[g] {
                    windeg[o] -= 1;
                    if windeg[o] == 0 {
                        heap.push(Reverse((self.wires[o].id.as_str(), o)));
                    }
                }
            }
        }
        let mut wire_rank = vec![0; nw];
        for (r, &w) in wire_order.iter().enumerate() {
            wire_rank[w] = r;
        }
        let inputs = (0..nw).filter(|&w| source[w] == Endpoint::Boundary).collect();
        let outputs = (0..nw).filter(|&w| sink[w] == Endpoint::Boundary).collect();
        Ok(Topology {
            wire_index,
            source,
            sink,
            gate_inputs,
            gate_outputs,
            gate_order,
            wire_order,
            wire_rank,
            inputs,
            outputs,
        })
    }

    /// Wire ids in temporal order: a topological order of the wire DAG with
    /// incomparable wires taken in lexicographic id order.
    pub fn temporal_order(&self) -> Result<Vec<String>> {
        let top = self.topology()?;
        Ok(top.wire_order.iter().map(|&w| self.wires[w].id.clone()).collect())
    }

    pub fn input_ids(&self) -> Result<Vec<String>> {
        let top = self.topology()?;
        Ok(top.inputs.iter().map(|&w| self.wires[w].id.clone()).collect())
    }

    pub fn output_ids(&self) -> Result<Vec<String>> {
        let top = self.topology()?;
        Ok(top.outputs.iter().map(|&w| self.wires[w].id.clone()).collect())
    }

    /// Product of boundary-input dimensions.
    pub fn input_dim(&self) -> Result<usize> {
        let top = self.topology()?;
        Ok(top.inputs.iter().map(|&w| self.wires[w].dim).product())
    }

    /// Unitary from boundary inputs to boundary outputs, both in declaration
    /// order.
    pub fn total_unitary(&self) -> Result<ComplexMatrix> {
        let top = self.topology()?;
        let ins: Vec<String> = top.inputs.iter().map(|&w| self.wires[w].id.clone()).collect();
        let outs: Vec<String> = top.outputs.iter().map(|&w| self.wires[w].id.clone()).collect();
        sim::unitary_between(self, &top, &ins, &outs)
    }

    /// Unitary with explicitly ordered boundary inputs and outputs.
    pub fn unitary_between(&self, inputs: &[String], outputs: &[String]) -> Result<ComplexMatrix> {
        let top = self.topology()?;
        sim::unitary_between(self, &top, inputs, outputs)
    }

    /// The sub-circuit made of the selected gates plus the listed extra
    /// wires; wires crossing the selection become boundary wires.
    pub fn subcircuit(&self, top: &Topology, gates: &[bool], extra_wires: &[usize]) -> Circuit {
        let mut keep = vec![false; self.wires.len()];
        for &w in extra_wires {
            keep[w] = true;
        }
        for (g, &sel) in gates.iter().enumerate() {
            if sel {
                for &w in top.gate_inputs[g].iter().chain(&top.gate_outputs[g]) {
                    keep[w] = true;
                }
            }
        }
        Circuit {
            wires: self.wires.iter().zip(&keep).filter(|(_, &k)| k).map(|(w, _)| w.clone()).collect(),
            gates: self.gates.iter().zip(gates).filter(|(_, &k)| k).map(|(g, _)| g.clone()).collect(),
        }
    }
}

/// Incremental construction helper.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    circuit: Circuit,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn wire(mut self, id: &str, dim: usize) -> Self {
        self.circuit.wires.push(Wire { id: id.to_string(), dim });
        self
    }

    pub fn wires(mut self, ids: &[&str], dim: usize) -> Self {
        for id in ids {
            self.circuit.wires.push(Wire { id: id.to_string(), dim });
        }
        self
    }

    pub fn gate(mut self, id: &str, inputs: &[&str], outputs: &[&str], matrix: ComplexMatrix) -> Self {
        self.circuit.gates.push(Gate {
            id: id.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            matrix,
        });
        self
    }

    /// Finish, failing with the diagnostics if the circuit is invalid.
    pub fn build(self) -> Result<Circuit> {
        self.circuit.topology()?;
        Ok(self.circuit)
    }

    pub fn build_unchecked(self) -> Circuit {
        self.circuit
    }
}
