//! Chains, forks and colliders in an interference-influence graph.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::influence::InfluenceGraph;
use crate::{Error, Result};

/// One detected pattern with the roles taking part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    /// `roles[0] → roles[1] → roles[2]`.
    Chain(Vec<String>),
    /// `roles[1] ← roles[0] → roles[2]`.
    Fork(Vec<String>),
    /// `roles[0] → roles[1] ← roles[2]`.
    Collider(Vec<String>),
}

/// Outcome of the reduction search attached to a fork or collider.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Irreducibility {
    NotChecked,
    WitnessedReducible,
    NoReductionFound,
}

impl Irreducibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Irreducibility::NotChecked => "not_checked",
            Irreducibility::WitnessedReducible => "witnessed_reducible",
            Irreducibility::NoReductionFound => "no_reduction_found",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureLabel {
    pub patterns: Vec<Pattern>,
    pub reduction: Irreducibility,
}

impl StructureLabel {
    pub fn chain(&self) -> bool {
        self.patterns.iter().any(|p| matches!(p, Pattern::Chain(_)))
    }

    pub fn fork(&self) -> bool {
        self.patterns.iter().any(|p| matches!(p, Pattern::Fork(_)))
    }

    pub fn collider(&self) -> bool {
        self.patterns.iter().any(|p| matches!(p, Pattern::Collider(_)))
    }

    pub fn chains(&self) -> usize {
        self.patterns.iter().filter(|p| matches!(p, Pattern::Chain(_))).count()
    }
}

/// Influence between two nodes; edges are stored earlier → later.
pub(crate) fn linked(g: &InfluenceGraph, a: usize, b: usize) -> bool {
    g.influences(a, b) || g.influences(b, a)
}

const CHAINS: [[&str; 3]; 3] = [["Z", "A1", "A2"], ["Z", "B1", "B2"], ["Z", "A", "A2"]];
const FORKS: [[&str; 3]; 2] = [["Z", "A", "B"], ["Z", "A2", "B2"]];
const COLLIDERS: [[&str; 3]; 2] = [["X", "W", "Y"], ["X2", "W", "Y2"]];

/// Flags every chain, fork and collider among the named roles whose edges
/// are present. `roles` maps role names to node indices of `g`.
pub fn detect_structure(g: &InfluenceGraph, roles: &BTreeMap<String, usize>) -> Result<StructureLabel> {
    for (name, &i) in roles {
        if i >= g.nodes.len() {
            return Err(Error::Role(format!("role `{name}` names node {i} of a {}-node graph", g.nodes.len())));
        }
    }
    let get = |r: &str| roles.get(r).copied();
    let names = |t: &[&str; 3]| t.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut patterns = Vec::new();
    for t in &CHAINS {
        if let (Some(a), Some(b), Some(c)) = (get(t[0]), get(t[1]), get(t[2])) {
            if linked(g, a, b) && linked(g, b, c) {
                patterns.push(Pattern::Chain(names(t)));
            }
        }
    }
    for t in &FORKS {
        if let (Some(z), Some(a), Some(b)) = (get(t[0]), get(t[1]), get(t[2])) {
            if linked(g, z, a) && linked(g, z, b) {
                patterns.push(Pattern::Fork(names(t)));
            }
        }
    }
    for t in &COLLIDERS {
        if let (Some(x), Some(w), Some(y)) = (get(t[0]), get(t[1]), get(t[2])) {
            if linked(g, x, w) && linked(g, y, w) {
                patterns.push(Pattern::Collider(names(t)));
            }
        }
    }
    Ok(StructureLabel { patterns, reduction: Irreducibility::NotChecked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::{InfluenceEdge, PlacedDecomp};
    use crate::algebra::ProjDecomp;
    use crate::circuit::Placement;
    use alloc::vec;

    fn graph(n: usize, edges: &[(usize, usize)]) -> InfluenceGraph {
        let nodes = (0..n).map(|_| PlacedDecomp::new(ProjDecomp::trivial(2), Placement::input("w"))).collect();
        let edges = edges
            .iter()
            .map(|&(from, to)| InfluenceEdge { from, to, connected: true, influence: true, max_norm: 1.0, witness: None })
            .collect();
        InfluenceGraph { nodes, edges }
    }

    fn roles(r: &[(&str, usize)]) -> BTreeMap<String, usize> {
        r.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn flags_each_shape() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert!(detect_structure(&g, &roles(&[("Z", 0), ("A1", 1), ("A2", 2)])).unwrap().chain());
        let g = graph(3, &[(0, 1), (0, 2)]);
        let s = detect_structure(&g, &roles(&[("Z", 0), ("A", 1), ("B", 2)])).unwrap();
        assert!(s.fork() && !s.chain());
        let g = graph(3, &[(0, 1), (2, 1)]);
        assert!(detect_structure(&g, &roles(&[("X", 0), ("W", 1), ("Y", 2)])).unwrap().collider());
        let g = graph(3, &[(0, 1)]);
        assert_eq!(detect_structure(&g, &roles(&[("X", 0), ("W", 1), ("Y", 2)])).unwrap().patterns, vec![]);
        assert!(detect_structure(&g, &roles(&[("X", 7)])).is_err());
    }
}
