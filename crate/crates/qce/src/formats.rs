//! JSON encodings of circuits, bubbles, placed decompositions and scenario
//! specifications.
//!
//! Matrices are row-major arrays of `[re, im]` pairs. Readers accept either
//! a bare document or one that nests it under the expected key, so the
//! output of `scenario build` can be fed straight back to other commands.

use std::collections::BTreeMap;

use qce_core::algebra::ProjDecomp;
use qce_core::circuit::{Bubble, Circuit, Gate, Placement, Side, Wire};
use qce_core::influence::PlacedDecomp;
use qce_core::scenarios::{Constraint, ScenarioKind, ScenarioSpec};
use qce_core::{c64, ComplexMatrix};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::json::num;

/// Tolerance for validating decompositions read from files.
pub const LOAD_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] qce_core::Error),
}

pub type FormatResult<T> = Result<T, FormatError>;

fn shape(msg: impl Into<String>) -> FormatError {
    FormatError::Shape(msg.into())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(m.data().iter().map(|z| json!([num(z.re), num(z.im)])).collect())
}

pub fn matrix_from_pairs(pairs: &[[f64; 2]], rows: usize, cols: usize) -> FormatResult<ComplexMatrix> {
    if pairs.len() != rows * cols {
        return Err(shape(format!("matrix has {} entries, expected {rows}x{cols}", pairs.len())));
    }
    let data = pairs.iter().map(|[re, im]| c64(*re, *im)).collect();
    Ok(ComplexMatrix::from_vec(rows, cols, data)?)
}

/// Square matrix whose size is inferred from the entry count.
pub fn square_from_pairs(pairs: &[[f64; 2]]) -> FormatResult<ComplexMatrix> {
    let n = (pairs.len() as f64).sqrt().round() as usize;
    if n * n != pairs.len() || n == 0 {
        return Err(shape(format!("{} entries do not form a square matrix", pairs.len())));
    }
    matrix_from_pairs(pairs, n, n)
}

#[derive(Deserialize)]
struct WireDoc {
    id: String,
    dim: usize,
}

#[derive(Deserialize)]
struct GateDoc {
    id: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    matrix: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct CircuitDoc {
    wires: Vec<WireDoc>,
    gates: Vec<GateDoc>,
}

/// `v[key]` when present, else `v` itself.
fn nested<'a>(v: &'a Value, key: &str) -> &'a Value {
    v.get(key).unwrap_or(v)
}

pub fn circuit_to_json(c: &Circuit) -> Value {
    let wires: Vec<Value> = c.wires.iter().map(|w| json!({"id": w.id, "dim": w.dim})).collect();
    let gates: Vec<Value> = c
        .gates
        .iter()
        .map(|g| json!({"id": g.id, "inputs": g.inputs, "outputs": g.outputs, "matrix": matrix_to_json(&g.matrix)}))
        .collect();
    json!({"wires": wires, "gates": gates})
}

/// Reads a circuit without validating it; gate matrices take their shape
/// from the declared wire dimensions.
pub fn circuit_from_json(v: &Value) -> FormatResult<Circuit> {
    let doc = CircuitDoc::deserialize(nested(v, "circuit"))?;
    let dims: BTreeMap<&str, usize> = doc.wires.iter().map(|w| (w.id.as_str(), w.dim)).collect();
    let product = |gate: &str, ids: &[String]| -> FormatResult<usize> {
        ids.iter()
            .map(|id| dims.get(id.as_str()).copied().ok_or_else(|| shape(format!("gate `{gate}` uses undeclared wire `{id}`"))))
            .product()
    };
    let mut gates = Vec::with_capacity(doc.gates.len());
    for g in &doc.gates {
        let (rows, cols) = (product(&g.id, &g.outputs)?, product(&g.id, &g.inputs)?);
        let matrix = matrix_from_pairs(&g.matrix, rows, cols).map_err(|e| shape(format!("gate `{}`: {e}", g.id)))?;
        gates.push(Gate { id: g.id.clone(), inputs: g.inputs.clone(), outputs: g.outputs.clone(), matrix });
    }
    let wires = doc.wires.into_iter().map(|w| Wire { id: w.id, dim: w.dim }).collect();
    Ok(Circuit::new(wires, gates))
}

pub fn bubble_to_json(b: &Bubble) -> Value {
    json!({"bubble": b.wires()})
}

/// Reads `{"bubble": [...]}`, or picks `name` (or the only entry) from a
/// `{"bubbles": {name: [...]}}` map.
pub fn bubble_from_json(v: &Value, c: &Circuit, name: Option<&str>) -> FormatResult<Bubble> {
    let ids = if let Some(list) = v.get("bubble") {
        list
    } else if let Some(Value::Object(map)) = v.get("bubbles") {
        match name {
            Some(n) => map.get(n).ok_or_else(|| shape(format!("no bubble named `{n}`")))?,
            None if map.len() == 1 => map.values().next().expect("one entry"),
            None => {
                let names: Vec<&String> = map.keys().collect();
                return Err(shape(format!("several bubbles ({names:?}); choose one with --bubble-name")));
            }
        }
    } else {
        return Err(shape("expected a `bubble` list"));
    };
    let ids = Vec::<String>::deserialize(ids)?;
    Ok(Bubble::from_ids(c, ids)?)
}

fn side_str(s: Side) -> &'static str {
    s.as_str()
}

fn parse_side(s: &str) -> FormatResult<Side> {
    match s {
        "in" => Ok(Side::In),
        "out" => Ok(Side::Out),
        other => Err(shape(format!("side must be `in` or `out`, got `{other}`"))),
    }
}

pub fn decomp_to_json(d: &ProjDecomp) -> Value {
    Value::Array(d.projectors().iter().map(matrix_to_json).collect())
}

pub fn placed_to_json(p: &PlacedDecomp) -> Value {
    json!({
        "wire": p.at.wire,
        "side": side_str(p.at.side),
        "events": (0..p.decomp.len()).collect::<Vec<_>>(),
        "projectors": decomp_to_json(&p.decomp),
    })
}

#[derive(Deserialize)]
struct PlacedDoc {
    wire: String,
    side: String,
    projectors: Vec<Vec<[f64; 2]>>,
}

pub fn decomp_from_pairs(projectors: &[Vec<[f64; 2]>]) -> FormatResult<ProjDecomp> {
    let mats = projectors.iter().map(|p| square_from_pairs(p)).collect::<FormatResult<Vec<_>>>()?;
    Ok(ProjDecomp::new(mats, LOAD_TOL)?)
}

pub fn placed_from_json(v: &Value) -> FormatResult<PlacedDecomp> {
    let doc = PlacedDoc::deserialize(v)?;
    let decomp = decomp_from_pairs(&doc.projectors).map_err(|e| shape(format!("decomposition at `{}`: {e}", doc.wire)))?;
    Ok(PlacedDecomp::new(decomp, Placement::new(doc.wire, parse_side(&doc.side)?)))
}

/// Reads the `decompositions` list (also found in preferred-set reports).
pub fn decomps_from_json(v: &Value) -> FormatResult<Vec<PlacedDecomp>> {
    match v.get("decompositions") {
        Some(Value::Array(items)) => items.iter().map(placed_from_json).collect(),
        _ => Err(shape("expected a `decompositions` list")),
    }
}

pub fn decomps_to_json(placed: &[PlacedDecomp]) -> Value {
    Value::Array(placed.iter().map(placed_to_json).collect())
}

/// Scenario spec with its circuit inlined.
pub fn spec_to_json(spec: &ScenarioSpec) -> Value {
    let roles: Map<String, Value> = spec.roles.iter().map(|(k, p)| (k.clone(), placed_to_json(p))).collect();
    let systems: Map<String, Value> = spec.systems.iter().map(|(k, w)| (k.clone(), json!(w))).collect();
    let constraints: Vec<Value> = spec.constraints.iter().map(|c| json!({"from": c.from, "to": c.to})).collect();
    json!({
        "kind": spec.kind.as_str(),
        "circuit": circuit_to_json(&spec.circuit),
        "roles": roles,
        "systems": systems,
        "constraints": constraints,
    })
}

#[derive(Deserialize)]
struct ConstraintDoc {
    from: String,
    to: String,
}

/// Reads a spec (bare or nested under `spec`). The circuit is taken from
/// the document when present, otherwise from `fallback`.
pub fn spec_from_json(v: &Value, fallback: Option<Circuit>) -> FormatResult<ScenarioSpec> {
    let v = nested(v, "spec");
    let kind_str = v.get("kind").and_then(Value::as_str).ok_or_else(|| shape("spec needs a `kind`"))?;
    let kind = ScenarioKind::parse(kind_str).ok_or_else(|| shape(format!("unknown scenario kind `{kind_str}`")))?;
    let circuit = match v.get("circuit") {
        Some(c) => circuit_from_json(c)?,
        None => fallback.ok_or_else(|| shape("spec has no circuit; pass --circuit"))?,
    };
    let mut spec = ScenarioSpec::new(kind, circuit);
    if let Some(Value::Object(roles)) = v.get("roles") {
        for (name, p) in roles {
            spec.roles.insert(name.clone(), placed_from_json(p).map_err(|e| shape(format!("role `{name}`: {e}")))?);
        }
    } else {
        return Err(shape("spec needs a `roles` object"));
    }
    if let Some(systems) = v.get("systems") {
        spec.systems = BTreeMap::<String, Vec<String>>::deserialize(systems)?;
    }
    if let Some(cs) = v.get("constraints") {
        spec.constraints =
            Vec::<ConstraintDoc>::deserialize(cs)?.into_iter().map(|c| Constraint::new(c.from, c.to)).collect();
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::to_canonical;
    use qce_core::fixtures::{random_bubble, random_circuit};
    use qce_core::preference::preferred_set;
    use qce_core::scenarios::{bell_instance, pbr_instance};

    fn reparse(v: &Value) -> Value {
        serde_json::from_str(&to_canonical(v)).unwrap()
    }

    #[test]
    fn circuits_round_trip_exactly() {
        for seed in 0..20 {
            let c = random_circuit(seed, 5, 3).unwrap();
            let back = circuit_from_json(&reparse(&circuit_to_json(&c))).unwrap();
            assert_eq!(back, c);
            let b = random_bubble(&c, seed, 3).unwrap();
            assert_eq!(bubble_from_json(&reparse(&bubble_to_json(&b)), &c, None).unwrap(), b);
        }
    }

    #[test]
    fn preferred_sets_round_trip() {
        let c = random_circuit(4, 5, 3).unwrap();
        let b = random_bubble(&c, 4, 3).unwrap();
        let ps = preferred_set(&c, &b, 1e-9, 0).unwrap();
        let v = reparse(&json!({"decompositions": decomps_to_json(&ps.entries)}));
        let back = decomps_from_json(&v).unwrap();
        for (p, q) in ps.entries.iter().zip(&back) {
            assert_eq!(p.at, q.at);
            assert!(p.decomp.distance(&q.decomp) <= 1e-12);
        }
    }

    #[test]
    fn specs_round_trip() {
        for spec in [bell_instance(true).unwrap().spec, pbr_instance().unwrap()] {
            let back = spec_from_json(&reparse(&spec_to_json(&spec)), None).unwrap();
            assert_eq!(back.circuit, spec.circuit);
            assert_eq!(back.systems, spec.systems);
            assert_eq!(back.constraints, spec.constraints);
            for (k, p) in &spec.roles {
                assert!(back.roles[k].decomp.distance(&p.decomp) <= 1e-12);
            }
        }
    }

    #[test]
    fn wrong_matrix_size_is_rejected() {
        let v = json!({"wires": [{"id": "a", "dim": 2}, {"id": "b", "dim": 2}],
                       "gates": [{"id": "g", "inputs": ["a"], "outputs": ["b"], "matrix": [[1.0, 0.0]]}]});
        assert!(matches!(circuit_from_json(&v), Err(FormatError::Shape(_))));
    }
}
