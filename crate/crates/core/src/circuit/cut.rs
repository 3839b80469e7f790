//! Bubble incisions: every bubble wire is split into a lower half that
//! leaves through the output boundary and an upper half that re-enters
//! through the input boundary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Bubble, Circuit, Wire};
use crate::linalg::{c64, ComplexMatrix};
use crate::{Error, Result};

/// Label of the lower half of a cut wire (an output of the cut circuit).
pub fn lower_half(wire: &str) -> String {
    format!("{wire}:in")
}

/// Label of the upper half of a cut wire (an input of the cut circuit).
pub fn upper_half(wire: &str) -> String {
    format!("{wire}:out")
}

/// Unitary of a circuit with all bubble wires cut.
///
/// Inputs are the upper halves of the bubble wires (bubble order) followed
/// by the remaining boundary inputs; outputs are the lower halves followed
/// by the remaining boundary outputs. A cut boundary input keeps its lower
/// half `w:in` among the remaining inputs, and symmetrically for outputs.
#[derive(Clone, Debug)]
pub struct SingleShotChannel {
    pub unitary: ComplexMatrix,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    /// Number of cut wires; they lead both label lists.
    pub cut: usize,
    /// The rewired circuit the unitary was computed from.
    pub circuit: Circuit,
}

impl SingleShotChannel {
    /// Feed each lower half back into its upper half, recovering the
    /// unitary of the uncut circuit.
    pub fn resplice(&self) -> ComplexMatrix {
        let k: usize = self.input_dims[..self.cut].iter().product();
        let dg: usize = self.input_dims[self.cut..].iter().product();
        let df: usize = self.output_dims[self.cut..].iter().product();
        ComplexMatrix::from_fn(df, dg, |f, g| {
            let mut acc = c64(0.0, 0.0);
            for t in 0..k {
                acc += self.unitary[(t * df + f, t * dg + g)];
            }
            acc
        })
    }
}

/// The circuit with every bubble wire replaced by its two halves.
pub(crate) fn rewire(c: &Circuit, b: &Bubble) -> Result<Circuit> {
    for w in b.wires() {
        if c.wire(w).is_none() {
            return Err(Error::UnknownWire(w.clone()));
        }
    }
    let mut wires = Vec::with_capacity(c.wires.len() + b.len());
    for w in &c.wires {
        if b.contains(&w.id) {
            wires.push(Wire { id: lower_half(&w.id), dim: w.dim });
            wires.push(Wire { id: upper_half(&w.id), dim: w.dim });
        } else {
            wires.push(w.clone());
        }
    }
    let mut gates = c.gates.clone();
    for g in &mut gates {
        for id in &mut g.inputs {
            if b.contains(id) {
                *id = upper_half(id);
            }
        }
        for id in &mut g.outputs {
            if b.contains(id) {
                *id = lower_half(id);
            }
        }
    }
    Ok(Circuit { wires, gates })
}

/// Cut every bubble wire and return the resulting single-shot unitary.
pub fn cut_bubble(c: &Circuit, b: &Bubble) -> Result<SingleShotChannel> {
    c.topology()?;
    let broken = rewire(c, b)?;
    let top = broken.topology()?;
    let mut input_labels: Vec<String> = b.wires().iter().map(|w| upper_half(w)).collect();
    let mut output_labels: Vec<String> = b.wires().iter().map(|w| lower_half(w)).collect();
    for &w in &top.inputs {
        let id = &broken.wires[w].id;
        if !input_labels.contains(id) {
            input_labels.push(id.clone());
        }
    }
    for &w in &top.outputs {
        let id = &broken.wires[w].id;
        if !output_labels.contains(id) {
            output_labels.push(id.clone());
        }
    }
    let unitary = broken.unitary_between(&input_labels, &output_labels)?;
    let dim_of = |id: &String| broken.wire_dim(id);
    Ok(SingleShotChannel {
        input_dims: input_labels.iter().map(dim_of).collect::<Result<_>>()?,
        output_dims: output_labels.iter().map(dim_of).collect::<Result<_>>()?,
        unitary,
        input_labels,
        output_labels,
        cut: b.len(),
        circuit: broken,
    })
}
