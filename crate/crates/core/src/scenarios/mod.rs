//! Worked models and nonclassicality classifiers.
//!
//! A [`ScenarioSpec`] binds named roles (`Z`, `W`, `X`, `A`, ...) to placed
//! decompositions of a circuit. Classifiers turn roles into reduced
//! operators or history tables and decide the scenario conditions; the
//! structure detector reads chains, forks and colliders off the
//! interference-influence graph.

mod classify;
mod instrument;
mod lhv;
mod models;
mod reduction;
mod structure;
mod three_box;

pub use classify::{
    bell_table, BellCase, LHV_TOL, check_constraints, classify_bell, classify_bell_with, classify_complementarity,
    classify_local_friendliness, classify_pbr, classify_wigner, complementarity_operators, pbr_operators, BellReport,
    ComplementarityReport, LocalFriendlinessReport, PbrEvents, PbrOperators, PbrReport, WignerReport,
};
pub use instrument::{
    build_instrument_model, compose_instruments, dilate_instrument, instrument_conditionals, Composition, Dilation, Instrument, InstrumentModel,
    InstrumentStage,
};
pub use lhv::{lhv_feasible, strategy, BellTable, LhvReport, SETTING_MASS_FLOOR};
pub use models::{
    bell_instance, build_prepare_measure, build_wigners_friend, complementarity_instance,
    fourier_matrix, local_friendliness_instance, operational_three_box, pbr_basis, pbr_instance, shift_unitary,
    unitary_with_first_column, BellInstance, OperationalThreeBox, PrepareMeasure, WignersFriend,
};
pub use reduction::{search_reduction, verify_reduction, ReductionCheck, ReductionMode, ReductionOutcome, ReductionWitness};
pub use structure::{detect_structure, Irreducibility, Pattern, StructureLabel};
pub use three_box::{three_box_check, three_box_triplets, ParadoxInstance, ThreeBoxReport};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::circuit::{Circuit, Embedder, Slice, Topology};
use crate::influence::PlacedDecomp;
use crate::linalg::{partial_trace, permute_factors, ComplexMatrix, DimVector};
use crate::{Error, Result};

/// The five scenario families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKind {
    Complementarity,
    Wigner,
    Bell,
    Pbr,
    LocalFriendliness,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Complementarity,
        ScenarioKind::Wigner,
        ScenarioKind::Bell,
        ScenarioKind::Pbr,
        ScenarioKind::LocalFriendliness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Complementarity => "complementarity",
            ScenarioKind::Wigner => "wigner",
            ScenarioKind::Bell => "bell",
            ScenarioKind::Pbr => "pbr",
            ScenarioKind::LocalFriendliness => "local_friendliness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Roles that must be present.
    pub fn required_roles(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Complementarity => &["Z", "X", "A"],
            ScenarioKind::Wigner => &["Z", "X1", "A1", "X2", "A2"],
            ScenarioKind::Bell => &["Z", "X", "A", "Y", "B"],
            ScenarioKind::Pbr => &["Z", "W", "X", "A", "Y", "B"],
            ScenarioKind::LocalFriendliness => &["Z", "X1", "A1", "X2", "A2", "Y1", "B1", "Y2", "B2"],
        }
    }

    /// Roles that may be omitted (treated as the trivial decomposition).
    pub fn optional_roles(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Pbr => &[],
            _ => &["W"],
        }
    }

    /// Named system groups the reduced operators live on.
    pub fn required_systems(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Complementarity | ScenarioKind::Pbr => &["S"],
            ScenarioKind::Wigner => &["S1", "S2"],
            ScenarioKind::Bell => &[],
            ScenarioKind::LocalFriendliness => &["SA1", "SA2", "SB1", "SB2"],
        }
    }
}

/// Declared absence of quantum influence from wire `from` to wire `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub from: String,
    pub to: String,
}

impl Constraint {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Constraint { from: from.into(), to: to.into() }
    }
}

/// A circuit with decompositions bound to scenario roles.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub circuit: Circuit,
    pub roles: BTreeMap<String, PlacedDecomp>,
    /// Ordered wire groups, e.g. `S` for the system carrying prepared states.
    pub systems: BTreeMap<String, Vec<String>>,
    pub constraints: Vec<Constraint>,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, circuit: Circuit) -> Self {
        ScenarioSpec { kind, circuit, roles: BTreeMap::new(), systems: BTreeMap::new(), constraints: Vec::new() }
    }

    pub fn with_role(mut self, role: &str, p: PlacedDecomp) -> Self {
        self.roles.insert(role.to_string(), p);
        self
    }

    pub fn with_system(mut self, name: &str, wires: &[&str]) -> Self {
        self.systems.insert(name.to_string(), wires.iter().map(|w| w.to_string()).collect());
        self
    }

    pub fn with_constraint(mut self, from: &str, to: &str) -> Self {
        self.constraints.push(Constraint::new(from, to));
        self
    }

    pub fn role(&self, name: &str) -> Result<&PlacedDecomp> {
        self.roles.get(name).ok_or_else(|| Error::Role(format!("{} scenario is missing role `{name}`", self.kind.as_str())))
    }

    pub fn optional_role(&self, name: &str) -> Option<&PlacedDecomp> {
        self.roles.get(name)
    }

    pub fn system(&self, name: &str) -> Result<&[String]> {
        self.systems
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Role(format!("{} scenario is missing system `{name}`", self.kind.as_str())))
    }

    /// Check roles, systems and constraints against the kind and circuit.
    pub fn validate(&self) -> Result<()> {
        self.circuit.topology()?;
        for r in self.kind.required_roles() {
            self.role(r)?;
        }
        for (name, p) in &self.roles {
            if !self.kind.required_roles().contains(&name.as_str()) && !self.kind.optional_roles().contains(&name.as_str()) {
                return Err(Error::Role(format!("role `{name}` does not belong to a {} scenario", self.kind.as_str())));
            }
            let dim = self.circuit.wire_dim(&p.at.wire)?;
            if p.decomp.dim() != dim {
                return Err(Error::DimensionMismatch(format!("role `{name}` has dimension {} on a wire of dimension {dim}", p.decomp.dim())));
            }
            p.decomp.validate(1e-7)?;
        }
        for s in self.kind.required_systems() {
            let ws = self.system(s)?;
            if ws.is_empty() {
                return Err(Error::Role(format!("system `{s}` is empty")));
            }
            for w in ws {
                self.circuit.wire_dim(w)?;
            }
        }
        for k in &self.constraints {
            self.circuit.wire_dim(&k.from)?;
            self.circuit.wire_dim(&k.to)?;
        }
        Ok(())
    }

    /// A spec of another kind built from renamed roles and systems.
    pub fn derive(&self, kind: ScenarioKind, roles: &[(&str, &str)], systems: &[(&str, &str)]) -> Result<ScenarioSpec> {
        let mut out = ScenarioSpec::new(kind, self.circuit.clone());
        for &(new, old) in roles {
            if let Some(p) = self.roles.get(old) {
                out.roles.insert(new.to_string(), p.clone());
            }
        }
        for &(new, old) in systems {
            out.systems.insert(new.to_string(), self.system(old)?.to_vec());
        }
        out.constraints = self.constraints.clone();
        Ok(out)
    }
}

/// Heisenberg projectors of roles, brought to a slice holding a system
/// group, for building reduced operators.
pub(crate) struct SystemFrame {
    slice: Slice,
    keep: Vec<usize>,
    top: Topology,
    circuit: Circuit,
}

impl SystemFrame {
    pub(crate) fn new(c: &Circuit, systems: &[String]) -> Result<Self> {
        let top = c.topology()?;
        let ids: Vec<usize> = systems
            .iter()
            .map(|s| top.wire_index.get(s).copied().ok_or_else(|| Error::UnknownWire(s.clone())))
            .collect::<Result<_>>()?;
        let mut union = alloc::vec![false; top.num_gates()];
        for &w in &ids {
            for (u, a) in union.iter_mut().zip(top.wire_ancestors(w)) {
                *u |= a;
            }
        }
        let masks = core::iter::once(union).chain(ids.iter().map(|&w| top.wire_ancestors(w)));
        for mask in masks {
            let mut slice = Slice::initial(c, &top.inputs)?;
            slice.advance(c, &top, &mask)?;
            if let Some(keep) = ids.iter().map(|&s| slice.position(s)).collect::<Option<Vec<_>>>() {
                return Ok(SystemFrame { slice, keep, top, circuit: c.clone() });
            }
        }
        Err(Error::Role(format!("no slice of the circuit holds all of {systems:?}")))
    }

    pub(crate) fn input_dim(&self) -> usize {
        self.slice.v.cols()
    }

    /// Heisenberg projectors (input frame) of a placed decomposition.
    pub(crate) fn heisenberg(&self, p: &PlacedDecomp) -> Result<Vec<ComplexMatrix>> {
        let mut emb = Embedder::new(&self.circuit, &self.top);
        p.decomp.projectors().iter().map(|q| emb.embed(q, &p.at.wire)).collect()
    }

    /// `Tr_rest(push(ops[0] ⋯ ops[k]))` on the system group, divided by the
    /// dimensions of traced slice wires not in `own`.
    pub(crate) fn reduce(&self, ops: &[&ComplexMatrix], own: &[&str]) -> Result<ComplexMatrix> {
        let mut prod = ComplexMatrix::identity(self.slice.v.cols());
        for op in ops {
            prod = prod.matmul(op);
        }
        let local = self.slice.push_forward(&prod);
        let mut sorted = self.keep.clone();
        sorted.sort_unstable();
        let reduced = partial_trace(&local, &self.slice.dims, &sorted)?;
        let perm: Vec<usize> = self.keep.iter().map(|k| sorted.iter().position(|s| s == k).unwrap_or(0)).collect();
        let kept_dims = DimVector(sorted.iter().map(|&k| self.slice.dims.0[k]).collect());
        let reduced = permute_factors(&reduced, &kept_dims, &perm)?;
        let mut norm = 1.0;
        for (pos, &w) in self.slice.wires.iter().enumerate() {
            if self.keep.contains(&pos) {
                continue;
            }
            if !own.contains(&self.circuit.wires[w].id.as_str()) {
                norm *= self.slice.dims.0[pos] as f64;
            }
        }
        Ok(reduced.scale_real(1.0 / norm))
    }
}
