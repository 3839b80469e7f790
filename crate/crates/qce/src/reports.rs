//! JSON views of analysis results.

use qce_core::circuit::{Circuit, Diagnostic};
use qce_core::histories::{ConsistencyReport, HistoryDistribution};
use qce_core::influence::{InfluenceGraph, PlacedDecomp};
use qce_core::preference::{PatternReport, PreferredSet};
use qce_core::scenarios::{
    BellReport, ComplementarityReport, LhvReport, LocalFriendlinessReport, Pattern, PbrReport, ReductionOutcome,
    ReductionWitness, StructureLabel, ThreeBoxReport, WignerReport,
};
use serde_json::{json, Value};

use crate::formats::{bubble_to_json, decomp_to_json, decomps_to_json};
use crate::json::num;

/// Version tag carried by every report.
pub fn schema(command: &str) -> String {
    format!("qce.{command}/1")
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn diagnostics(diags: &[Diagnostic]) -> Value {
    Value::Array(diags.iter().map(|d| json!({"kind": d.kind(), "message": d.to_string()})).collect())
}

pub fn validate(c: &Circuit, diags: &[Diagnostic]) -> Value {
    let mut v = json!({
        "schema": schema("validate"),
        "valid": diags.is_empty(),
        "diagnostics": diagnostics(diags),
        "wires": c.wires.len(),
        "gates": c.gates.len(),
    });
    if diags.is_empty() {
        if let Ok(top) = c.topology() {
            let ids = |ws: &[usize]| -> Vec<String> { ws.iter().map(|&w| c.wires[w].id.clone()).collect() };
            v["inputs"] = json!(ids(&top.inputs));
            v["outputs"] = json!(ids(&top.outputs));
            v["temporal_order"] = json!(c.temporal_order().unwrap_or_default());
        }
    }
    v
}

fn placement(p: &PlacedDecomp) -> Value {
    json!({"wire": p.at.wire, "side": p.at.side.as_str(), "events": p.decomp.len()})
}

pub fn influence_graph(g: &InfluenceGraph) -> Value {
    let nodes: Vec<Value> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(k, p)| json!({"index": k, "wire": p.at.wire, "side": p.at.side.as_str(), "projectors": p.decomp.len()}))
        .collect();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| {
            json!({
                "from": e.from,
                "to": e.to,
                "connected": e.connected,
                "influence": e.influence,
                "witness_norm": num(e.max_norm),
                "witness": e.witness.map(|(i, j)| json!([i, j])),
            })
        })
        .collect();
    json!({"nodes": nodes, "edges": edges})
}

pub fn pattern(p: &PatternReport) -> Value {
    json!({
        "clean": p.is_clean(),
        "violations": p.violations.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
        "graph": influence_graph(&p.graph),
    })
}

pub fn preferred_set(ps: &PreferredSet, pat: &PatternReport) -> Value {
    json!({
        "schema": schema("preferred-set"),
        "bubble": bubble_to_json(&ps.bubble)["bubble"],
        "decompositions": decomps_to_json(&ps.entries),
        "pattern": pattern(pat),
    })
}

pub fn consistency(r: &ConsistencyReport) -> Value {
    json!({
        "consistent": r.consistent,
        "max_off_diagonal": num(r.max_off_diagonal),
        "worst_pair": r.worst_pair.map(|(a, b)| json!([a, b])),
    })
}

pub fn distribution(d: &HistoryDistribution) -> Value {
    json!({
        "decompositions": d.placed.iter().map(placement).collect::<Vec<_>>(),
        "sizes": d.sizes,
        "probabilities": nums(&d.probs),
        "total": num(d.total()),
    })
}

pub fn histories(d: &HistoryDistribution, sandwich_gap: f64, cons: &ConsistencyReport) -> Value {
    let mut v = distribution(d);
    v["schema"] = json!(schema("histories"));
    v["sandwich_max_difference"] = num(sandwich_gap);
    v["consistency"] = consistency(cons);
    v
}

pub fn samples(d: &HistoryDistribution, seed: u64, draws: &[(u64, Vec<usize>)]) -> Value {
    json!({
        "schema": schema("sample"),
        "seed": seed,
        "n": draws.len(),
        "decompositions": d.placed.iter().map(placement).collect::<Vec<_>>(),
        "samples": draws.iter().map(|(s, h)| json!({"seed": s, "history": h})).collect::<Vec<_>>(),
    })
}

pub fn structure(s: &StructureLabel) -> Value {
    let pats: Vec<Value> = s
        .patterns
        .iter()
        .map(|p| match p {
            Pattern::Chain(r) => json!({"pattern": "chain", "roles": r}),
            Pattern::Fork(r) => json!({"pattern": "fork", "roles": r}),
            Pattern::Collider(r) => json!({"pattern": "collider", "roles": r}),
        })
        .collect();
    json!({"patterns": pats, "reduction": s.reduction.as_str()})
}

pub fn complementarity(r: &ComplementarityReport) -> Value {
    json!({
        "holds": r.holds,
        "witness": r.witness.map(|(i, j, a, x)| json!({"i": i, "j": j, "a": a, "x": x})),
        "max_commutator": num(r.max_commutator),
        "prep_to_outcome": r.prep_to_outcome,
    })
}

pub fn wigner(r: &WignerReport) -> Value {
    json!({
        "holds": r.holds,
        "first": complementarity(&r.first),
        "second": complementarity(&r.second),
        "structure": structure(&r.structure),
    })
}

fn witness(w: &ReductionWitness) -> Value {
    let opt = |d: &Option<qce_core::algebra::ProjDecomp>| d.as_ref().map(decomp_to_json);
    json!({
        "z_a": decomp_to_json(&w.z_a),
        "z_b": decomp_to_json(&w.z_b),
        "w_a": opt(&w.w_a),
        "w_b": opt(&w.w_b),
        "z_map": w.z_map,
        "w_map": w.w_map,
    })
}

pub fn reduction(r: &Option<ReductionOutcome>) -> Value {
    match r {
        None => Value::Null,
        Some(ReductionOutcome::NoReductionFound) => json!({"result": "NO_REDUCTION_FOUND"}),
        Some(ReductionOutcome::Found(w)) => json!({"result": "FOUND", "witness": witness(w)}),
    }
}

fn lhv(r: &LhvReport) -> Value {
    json!({
        "feasible": r.feasible,
        "residual": num(r.residual),
        "weights": nums(&r.weights),
        "chsh": r.chsh.map(num),
        "facet_agreement": r.facet_agreement,
    })
}

pub fn bell(r: &BellReport) -> Value {
    let cases: Vec<Value> = r
        .cases
        .iter()
        .map(|c| {
            json!({
                "i": c.i,
                "j": c.j,
                "shape": [c.table.nx, c.table.ny, c.table.na, c.table.nb],
                "probabilities": nums(&c.table.probs),
                "setting_mass": nums(&c.table.setting_mass),
                "lhv": lhv(&c.lhv),
            })
        })
        .collect();
    json!({
        "holds": r.holds,
        "chsh": r.chsh.map(num),
        "fork_a": r.fork_a,
        "fork_b": r.fork_b,
        "cases": cases,
        "reduction": reduction(&r.reduction),
        "structure": structure(&r.structure),
    })
}

pub fn pbr(r: &PbrReport) -> Value {
    json!({
        "holds": r.holds,
        "exclusion": r.exclusion,
        "exclusion_worst": num(r.exclusion_worst),
        "overlap": r.overlap,
        "overlap_norm": num(r.overlap_norm),
        "overlap_scale": num(r.overlap_scale),
        "collider_x": r.collider_x,
        "collider_y": r.collider_y,
        "reduction": reduction(&r.reduction),
        "structure": structure(&r.structure),
    })
}

pub fn local_friendliness(r: &LocalFriendlinessReport) -> Value {
    json!({
        "holds": r.holds,
        "bell": bell(&r.bell),
        "wigner_a": wigner(&r.wigner_a),
        "wigner_b": wigner(&r.wigner_b),
        "structure": structure(&r.structure),
    })
}

pub fn three_box(r: &ThreeBoxReport) -> Value {
    let paradox = |ps: &[qce_core::scenarios::ParadoxInstance]| -> Value {
        Value::Array(ps.iter().map(|p| json!({"first": p.first, "last": p.last, "middle": p.middle})).collect())
    };
    json!({
        "triplets_consistent": r.triplets_consistent,
        "joint": distribution(&r.joint),
        "joint_min": num(r.joint_min),
        "joint_valid": r.joint_valid,
        "marginal_defect": num(r.marginal_defect),
        "marginal_paradoxes": paradox(&r.marginal_paradoxes),
        "joint_paradoxes": paradox(&r.joint_paradoxes),
        "chains": r.chains,
        "blocked": r.blocked,
    })
}
