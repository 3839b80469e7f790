//! Scenario classifiers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lhv::{lhv_feasible, BellTable, LhvReport, SETTING_MASS_FLOOR};
use super::reduction::{search_reduction, verify_reduction, ReductionMode, ReductionOutcome, ReductionWitness};
use super::structure::{detect_structure, linked, Irreducibility, StructureLabel};
use super::{ScenarioKind, ScenarioSpec, SystemFrame};
use crate::circuit::Embedder;
use crate::histories::history_distribution;
use crate::influence::{influence_graph, max_commutator, PlacedDecomp};
use crate::linalg::ComplexMatrix;
use crate::{Error, Result};

/// Tolerance on LP residuals when deciding local-hidden-variable models.
pub const LHV_TOL: f64 = 1e-7;

fn expect_kind(spec: &ScenarioSpec, kind: ScenarioKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::Role(format!("expected a {} scenario, got {}", kind.as_str(), spec.kind.as_str())));
    }
    spec.validate()
}

fn heis(frame: &SystemFrame, p: Option<&PlacedDecomp>) -> Result<Vec<ComplexMatrix>> {
    match p {
        Some(p) => frame.heisenberg(p),
        None => Ok(vec![ComplexMatrix::identity(frame.input_dim())]),
    }
}

fn wire_of(p: Option<&PlacedDecomp>) -> Option<&str> {
    p.map(|p| p.at.wire.as_str())
}

/// Reduced operators `ρ^{ij}` (preparation `first`, optional `second`) and
/// `σ^{ax}` (setting `setting`, outcome `outcome`) on one system group.
struct PairOps {
    rho: Vec<Vec<ComplexMatrix>>,
    sigma: Vec<Vec<ComplexMatrix>>,
}

fn pair_ops(
    spec: &ScenarioSpec,
    first: Option<&PlacedDecomp>,
    second: Option<&PlacedDecomp>,
    setting: Option<&PlacedDecomp>,
    outcome: Option<&PlacedDecomp>,
    system: &str,
) -> Result<PairOps> {
    let frame = SystemFrame::new(&spec.circuit, spec.system(system)?)?;
    let (hz, hw, hx, ha) = (heis(&frame, first)?, heis(&frame, second)?, heis(&frame, setting)?, heis(&frame, outcome)?);
    let own_prep: Vec<&str> = [wire_of(first), wire_of(second)].into_iter().flatten().collect();
    let own_meas: Vec<&str> = [wire_of(setting), wire_of(outcome)].into_iter().flatten().collect();
    let rho = hz
        .iter()
        .map(|z| hw.iter().map(|w| frame.reduce(&[z, w], &own_prep)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let sigma = ha
        .iter()
        .map(|a| hx.iter().map(|x| frame.reduce(&[a, x], &own_meas)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(PairOps { rho, sigma })
}

/// `ρ^{ij}` indexed `[i][j]` and `σ^{ax}` indexed `[a][x]` on system `S`.
pub fn complementarity_operators(spec: &ScenarioSpec) -> Result<(Vec<Vec<ComplexMatrix>>, Vec<Vec<ComplexMatrix>>)> {
    let ops = pair_ops(spec, Some(spec.role("Z")?), spec.optional_role("W"), Some(spec.role("X")?), Some(spec.role("A")?), "S")?;
    Ok((ops.rho, ops.sigma))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplementarityReport {
    pub holds: bool,
    /// `(i, j, a, x)` with the largest scaled commutator.
    pub witness: Option<(usize, usize, usize, usize)>,
    /// Largest `‖[ρ, σ]‖_max / max(1, ‖ρ‖‖σ‖)`.
    pub max_commutator: f64,
    /// Interference influence from the preparation to the outcome.
    pub prep_to_outcome: bool,
}

fn scan_pairs(ops: &PairOps, tol: f64) -> (bool, Option<(usize, usize, usize, usize)>, f64) {
    let mut best = 0.0;
    let mut witness = None;
    for (i, row) in ops.rho.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            for (a, srow) in ops.sigma.iter().enumerate() {
                for (x, s) in srow.iter().enumerate() {
                    let scale = (r.frobenius_norm() * s.frobenius_norm()).max(1.0);
                    let n = r.commutator(s).max_abs() / scale;
                    if n > best {
                        best = n;
                        witness = Some((i, j, a, x));
                    }
                }
            }
        }
    }
    let holds = best > tol;
    (holds, if holds { witness } else { None }, best)
}

fn influence_between(spec: &ScenarioSpec, from: &PlacedDecomp, to: &PlacedDecomp, tol: f64) -> Result<bool> {
    let g = influence_graph(&spec.circuit, &[from.clone(), to.clone()], tol)?;
    Ok(linked(&g, 0, 1))
}

fn complementarity_of(
    spec: &ScenarioSpec,
    roles: [Option<&PlacedDecomp>; 4],
    system: &str,
    tol: f64,
) -> Result<ComplementarityReport> {
    let [z, w, x, a] = roles;
    let ops = pair_ops(spec, z, w, x, a, system)?;
    let (holds, witness, max_commutator) = scan_pairs(&ops, tol);
    let prep_to_outcome = match (z, a) {
        (Some(z), Some(a)) => influence_between(spec, z, a, tol)?,
        _ => false,
    };
    Ok(ComplementarityReport { holds, witness, max_commutator, prep_to_outcome })
}

/// Some `[ρ^{ij}, σ^{ax}]` is nonzero.
pub fn classify_complementarity(spec: &ScenarioSpec, tol: f64) -> Result<ComplementarityReport> {
    expect_kind(spec, ScenarioKind::Complementarity)?;
    let roles = [Some(spec.role("Z")?), spec.optional_role("W"), Some(spec.role("X")?), Some(spec.role("A")?)];
    complementarity_of(spec, roles, "S", tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerReport {
    pub holds: bool,
    /// Preparation `Z, W` against the friend's `X1, A1` on `S1`.
    pub first: ComplementarityReport,
    /// The friend's outcome `A1` against `X2, A2` on `S2`.
    pub second: ComplementarityReport,
    pub structure: StructureLabel,
}

/// Two chained complementarity scenarios.
pub fn classify_wigner(spec: &ScenarioSpec, tol: f64) -> Result<WignerReport> {
    expect_kind(spec, ScenarioKind::Wigner)?;
    let (z, a1, a2) = (spec.role("Z")?, spec.role("A1")?, spec.role("A2")?);
    let first = complementarity_of(spec, [Some(z), spec.optional_role("W"), Some(spec.role("X1")?), Some(a1)], "S1", tol)?;
    let second = complementarity_of(spec, [Some(a1), None, Some(spec.role("X2")?), Some(a2)], "S2", tol)?;
    let g = influence_graph(&spec.circuit, &[z.clone(), a1.clone(), a2.clone()], tol)?;
    let structure = detect_structure(&g, &role_map(&["Z", "A1", "A2"]))?;
    Ok(WignerReport { holds: first.holds && second.holds, first, second, structure })
}

fn role_map(names: &[&str]) -> BTreeMap<String, usize> {
    names.iter().enumerate().map(|(i, n)| (n.to_string(), i)).collect()
}

/// Every declared constraint `from ↛ to` holds: matrix units on the two
/// wires commute in the Heisenberg picture.
pub fn check_constraints(spec: &ScenarioSpec, tol: f64) -> Result<()> {
    let top = spec.circuit.topology()?;
    let mut emb = Embedder::new(&spec.circuit, &top);
    for k in &spec.constraints {
        let units = |emb: &mut Embedder, w: &str| -> Result<Vec<ComplexMatrix>> {
            let d = spec.circuit.wire_dim(w)?;
            let mut out = Vec::with_capacity(d * d);
            for r in 0..d {
                for c in 0..d {
                    out.push(emb.embed(&ComplexMatrix::unit(d, r, c), w)?);
                }
            }
            Ok(out)
        };
        let from = units(&mut emb, &k.from)?;
        let to = units(&mut emb, &k.to)?;
        let check = max_commutator(&from, &to, tol);
        if check.present {
            return Err(Error::ConstraintViolated(format!(
                "`{}` influences `{}` (commutator {:e})",
                k.from, k.to, check.max_norm
            )));
        }
    }
    Ok(())
}

/// `p(a, b | x, y, i, j)` from the history distribution over
/// `[Z, W, X, A, Y, B]`. `j` is ignored without a `W` role.
pub fn bell_table(spec: &ScenarioSpec, i: usize, j: Option<usize>) -> Result<BellTable> {
    let (table, _) = bell_table_with_mass(spec, i, j)?;
    Ok(table)
}

fn bell_placements(spec: &ScenarioSpec) -> Result<Vec<PlacedDecomp>> {
    let mut placed = vec![spec.role("Z")?.clone()];
    placed.extend(spec.optional_role("W").cloned());
    for r in ["X", "A", "Y", "B"] {
        placed.push(spec.role(r)?.clone());
    }
    Ok(placed)
}

fn bell_table_with_mass(spec: &ScenarioSpec, i: usize, j: Option<usize>) -> Result<(BellTable, f64)> {
    let placed = bell_placements(spec)?;
    let dist = history_distribution(&spec.circuit, &placed)?;
    bell_table_from(spec, &placed, &dist, i, j)
}

fn bell_table_from(
    spec: &ScenarioSpec,
    placed: &[PlacedDecomp],
    dist: &crate::histories::HistoryDistribution,
    i: usize,
    j: Option<usize>,
) -> Result<(BellTable, f64)> {
    let pos = |p: &PlacedDecomp| {
        dist.position(&p.at.wire, p.at.side)
            .ok_or_else(|| Error::Role(format!("placement on `{}` missing from the history table", p.at.wire)))
    };
    let z = spec.role("Z")?;
    let mut given = vec![(pos(z)?, i)];
    if let (Some(w), Some(j)) = (spec.optional_role("W"), j) {
        given.push((pos(w)?, j));
    }
    for (k, &(_, idx)) in given.iter().enumerate() {
        let size = placed[if k == 0 { 0 } else { 1 }].decomp.len();
        if idx >= size {
            return Err(Error::IndexOutOfRange(format!("event {idx} of a {size}-outcome decomposition")));
        }
    }
    let mass = dist.event_probability(&given)?;
    let cond = dist.conditional(&given)?;
    let [x, a, y, b] = ["X", "A", "Y", "B"].map(|r| spec.role(r));
    let (x, a, y, b) = (x?, a?, y?, b?);
    let (px, pa, py, pb) = (pos(x)?, pos(a)?, pos(y)?, pos(b)?);
    let (nx, na, ny, nb) = (x.decomp.len(), a.decomp.len(), y.decomp.len(), b.decomp.len());
    let mut probs = vec![0.0; nx * ny * na * nb];
    let mut setting_mass = vec![0.0; nx * ny];
    for xi in 0..nx {
        for yi in 0..ny {
            let m = cond.event_probability(&[(px, xi), (py, yi)])?;
            setting_mass[xi * ny + yi] = m;
            if m < SETTING_MASS_FLOOR {
                continue;
            }
            for ai in 0..na {
                for bi in 0..nb {
                    let p = cond.event_probability(&[(px, xi), (pa, ai), (py, yi), (pb, bi)])? / m;
                    probs[((xi * ny + yi) * na + ai) * nb + bi] = p;
                }
            }
        }
    }
    Ok((BellTable::with_setting_mass(nx, ny, na, nb, probs, setting_mass)?, mass))
}

/// One conditioned Bell table and its LHV verdict.
#[derive(Clone, Debug)]
pub struct BellCase {
    pub i: usize,
    pub j: Option<usize>,
    pub table: BellTable,
    pub lhv: LhvReport,
}

#[derive(Clone, Debug)]
pub struct BellReport {
    pub holds: bool,
    pub cases: Vec<BellCase>,
    /// Largest CHSH value over the evaluated cases.
    pub chsh: Option<f64>,
    pub fork_a: bool,
    pub fork_b: bool,
    pub reduction: Option<ReductionOutcome>,
    pub structure: StructureLabel,
}

/// [`classify_bell_with`] without a supplied witness.
pub fn classify_bell(spec: &ScenarioSpec, fixed: Option<(usize, Option<usize>)>, tol: f64) -> Result<BellReport> {
    classify_bell_with(spec, fixed, tol, None)
}

/// Decides whether `p(ab|xy, ij)` admits no local hidden-variable model,
/// for the fixed `(i, j)` or for every `(i, j)` of positive probability.
/// A nonclassical verdict must come with both fork edges and without a
/// valid reduction; a violation of either is reported as a numeric defect.
pub fn classify_bell_with(
    spec: &ScenarioSpec,
    fixed: Option<(usize, Option<usize>)>,
    tol: f64,
    witness: Option<&ReductionWitness>,
) -> Result<BellReport> {
    expect_kind(spec, ScenarioKind::Bell)?;
    check_constraints(spec, tol)?;
    let placed = bell_placements(spec)?;
    let dist = history_distribution(&spec.circuit, &placed)?;
    let nz = spec.role("Z")?.decomp.len();
    let nw = spec.optional_role("W").map(|w| w.decomp.len());
    let pairs: Vec<(usize, Option<usize>)> = match fixed {
        Some(p) => vec![p],
        None => (0..nz)
            .flat_map(|i| match nw {
                Some(n) => (0..n).map(|j| (i, Some(j))).collect::<Vec<_>>(),
                None => vec![(i, None)],
            })
            .collect(),
    };
    let mut cases = Vec::new();
    for (i, j) in pairs {
        let given_mass = {
            let mut given = vec![(dist.position(&placed[0].at.wire, placed[0].at.side).unwrap_or(0), i)];
            if let (Some(j), true) = (j, nw.is_some()) {
                given.push((dist.position(&placed[1].at.wire, placed[1].at.side).unwrap_or(0), j));
            }
            if i >= nz || j.zip(nw).map(|(j, n)| j >= n).unwrap_or(false) {
                return Err(Error::IndexOutOfRange(format!("preparation event ({i}, {j:?}) does not exist")));
            }
            dist.event_probability(&given)?
        };
        if given_mass <= 1e-12 {
            if fixed.is_some() {
                return Err(Error::ZeroProbabilityCondition(given_mass));
            }
            continue;
        }
        let (table, _) = bell_table_from(spec, &placed, &dist, i, j)?;
        let lhv = lhv_feasible(&table, LHV_TOL)?;
        cases.push(BellCase { i, j, table, lhv });
    }
    let holds = cases.iter().any(|c| !c.lhv.feasible);
    let chsh = cases.iter().filter_map(|c| c.table.chsh()).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let trio = [spec.role("Z")?.clone(), spec.role("A")?.clone(), spec.role("B")?.clone()];
    let g = influence_graph(&spec.circuit, &trio, tol)?;
    let (fork_a, fork_b) = (linked(&g, 0, 1), linked(&g, 0, 2));
    let mut structure = detect_structure(&g, &role_map(&["Z", "A", "B"]))?;
    let mut reduction = None;
    if holds {
        if !(fork_a && fork_b) {
            return Err(Error::NumericDefect("nonclassical Bell statistics without an interference fork".into()));
        }
        if let Some(w) = witness {
            if verify_reduction(spec, w, ReductionMode::Fork, tol)?.valid {
                return Err(Error::NumericDefect("nonclassical Bell statistics with a valid fork reduction".into()));
            }
        }
        let outcome = search_reduction(spec, ReductionMode::Fork, tol, 0)?;
        if outcome.is_found() {
            return Err(Error::NumericDefect("nonclassical Bell statistics with a reducible fork".into()));
        }
        structure.reduction = Irreducibility::NoReductionFound;
        reduction = Some(outcome);
    }
    Ok(BellReport { holds, cases, chsh, fork_a, fork_b, reduction, structure })
}

/// `ρ^{ax}` indexed `[a][x]`, `σ^{by}` indexed `[b][y]`, `ε^{ij}` indexed
/// `[i][j]`, all on system `S`.
#[derive(Clone, Debug)]
pub struct PbrOperators {
    pub rho: Vec<Vec<ComplexMatrix>>,
    pub sigma: Vec<Vec<ComplexMatrix>>,
    pub eps: Vec<Vec<ComplexMatrix>>,
}

pub fn pbr_operators(spec: &ScenarioSpec) -> Result<PbrOperators> {
    let frame = SystemFrame::new(&spec.circuit, spec.system("S")?)?;
    let get = |r: &str| -> Result<(Vec<ComplexMatrix>, &str)> {
        let p = spec.role(r)?;
        Ok((frame.heisenberg(p)?, p.at.wire.as_str()))
    };
    let table = |outer: &str, inner: &str, own: &[&str], scale: f64| -> Result<Vec<Vec<ComplexMatrix>>> {
        let (ho, _) = get(outer)?;
        let (hi, _) = get(inner)?;
        ho.iter()
            .map(|o| hi.iter().map(|i| frame.reduce(&[o, i], own).map(|m| m.scale_real(scale))).collect())
            .collect()
    };
    let (_, a) = get("A")?;
    let (_, b) = get("B")?;
    let (_, z) = get("Z")?;
    let dz = spec.circuit.wire_dim(z)? as f64;
    Ok(PbrOperators {
        rho: table("A", "X", &[a], 1.0)?,
        sigma: table("B", "Y", &[b], 1.0)?,
        eps: table("Z", "W", &[z], 1.0 / dz)?,
    })
}

/// Preparation events `(outcome, setting)` for the two wings: `rho`,
/// `rho2` on the `A/X` side, `sigma`, `sigma2` on the `B/Y` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PbrEvents {
    pub rho: (usize, usize),
    pub rho2: (usize, usize),
    pub sigma: (usize, usize),
    pub sigma2: (usize, usize),
}

impl Default for PbrEvents {
    fn default() -> Self {
        PbrEvents { rho: (0, 0), rho2: (1, 1), sigma: (0, 0), sigma2: (1, 1) }
    }
}

#[derive(Clone, Debug)]
pub struct PbrReport {
    pub holds: bool,
    /// Every `(i, j)` annihilates one of the four preparation products.
    pub exclusion: bool,
    /// Largest over `(i, j)` of the smallest scaled trace.
    pub exclusion_worst: f64,
    /// `‖ρ σ ρ' σ'‖_F` and its scale `‖ρ‖‖σ‖‖ρ'‖‖σ'‖`.
    pub overlap_norm: f64,
    pub overlap_scale: f64,
    pub overlap: bool,
    pub collider_x: bool,
    pub collider_y: bool,
    pub reduction: Option<ReductionOutcome>,
    pub structure: StructureLabel,
}

fn pick<'a>(t: &'a [Vec<ComplexMatrix>], (o, s): (usize, usize), what: &str) -> Result<&'a ComplexMatrix> {
    t.get(o)
        .and_then(|r| r.get(s))
        .ok_or_else(|| Error::IndexOutOfRange(format!("{what} event (outcome {o}, setting {s}) does not exist")))
}

/// PBR conditions: exclusion of one preparation product per `(i, j)`, and a
/// nonvanishing overlap of the non-orthogonal preparations.
pub fn classify_pbr(spec: &ScenarioSpec, ev: PbrEvents, tol: f64) -> Result<PbrReport> {
    expect_kind(spec, ScenarioKind::Pbr)?;
    check_constraints(spec, tol)?;
    let ops = pbr_operators(spec)?;
    for row in &ops.rho {
        for r in row {
            for srow in &ops.sigma {
                for s in srow {
                    let scale = (r.frobenius_norm() * s.frobenius_norm()).max(1.0);
                    if r.commutator(s).max_abs() > tol * scale {
                        return Err(Error::ConstraintViolated("preparations of the two wings do not commute".into()));
                    }
                }
            }
        }
    }
    let (r1, r2) = (pick(&ops.rho, ev.rho, "rho")?, pick(&ops.rho, ev.rho2, "rho'")?);
    let (s1, s2) = (pick(&ops.sigma, ev.sigma, "sigma")?, pick(&ops.sigma, ev.sigma2, "sigma'")?);
    let products = [r1.matmul(s1), r2.matmul(s1), r1.matmul(s2), r2.matmul(s2)];
    let scales = [
        r1.frobenius_norm() * s1.frobenius_norm(),
        r2.frobenius_norm() * s1.frobenius_norm(),
        r1.frobenius_norm() * s2.frobenius_norm(),
        r2.frobenius_norm() * s2.frobenius_norm(),
    ];
    let mut exclusion_worst: f64 = 0.0;
    let mut exclusion = true;
    for row in &ops.eps {
        for e in row {
            let en = e.frobenius_norm();
            let mut best = f64::INFINITY;
            let mut any = false;
            for (p, sc) in products.iter().zip(scales) {
                let scale = en * sc;
                let t = e.trace_of_product(p).norm();
                if t <= tol * scale.max(f64::MIN_POSITIVE) {
                    any = true;
                }
                best = best.min(if scale > 0.0 { t / scale } else { 0.0 });
            }
            exclusion &= any;
            exclusion_worst = exclusion_worst.max(best);
        }
    }
    let chain = r1.matmul(s1).matmul(r2).matmul(s2);
    let overlap_norm = chain.frobenius_norm();
    let overlap_scale = r1.frobenius_norm() * s1.frobenius_norm() * r2.frobenius_norm() * s2.frobenius_norm();
    let overlap = overlap_norm > tol * overlap_scale.max(1.0);
    let holds = exclusion && overlap;
    let (x, w, y) = (spec.role("X")?, spec.role("W")?, spec.role("Y")?);
    let g = influence_graph(&spec.circuit, &[x.clone(), w.clone(), y.clone()], tol)?;
    let (collider_x, collider_y) = (linked(&g, 0, 1), linked(&g, 2, 1));
    let mut structure = detect_structure(&g, &role_map(&["X", "W", "Y"]))?;
    let mut reduction = None;
    if holds {
        if !(collider_x && collider_y) {
            return Err(Error::NumericDefect("PBR conditions hold without an interference collider".into()));
        }
        let outcome = search_reduction(spec, ReductionMode::Collider, tol, 0)?;
        if outcome.is_found() {
            return Err(Error::NumericDefect("PBR conditions hold with a reducible collider".into()));
        }
        structure.reduction = Irreducibility::NoReductionFound;
        reduction = Some(outcome);
    }
    Ok(PbrReport {
        holds,
        exclusion,
        exclusion_worst,
        overlap_norm,
        overlap_scale,
        overlap,
        collider_x,
        collider_y,
        reduction,
        structure,
    })
}

#[derive(Clone, Debug)]
pub struct LocalFriendlinessReport {
    pub holds: bool,
    pub bell: BellReport,
    pub wigner_a: WignerReport,
    pub wigner_b: WignerReport,
    pub structure: StructureLabel,
}

/// A Bell scenario on the second-stage roles together with a Wigner's
/// friend scenario on at least one wing.
pub fn classify_local_friendliness(spec: &ScenarioSpec, tol: f64) -> Result<LocalFriendlinessReport> {
    expect_kind(spec, ScenarioKind::LocalFriendliness)?;
    let bell_spec = spec.derive(
        ScenarioKind::Bell,
        &[("Z", "Z"), ("W", "W"), ("X", "X2"), ("A", "A2"), ("Y", "Y2"), ("B", "B2")],
        &[],
    )?;
    let wa_spec = spec.derive(
        ScenarioKind::Wigner,
        &[("Z", "Z"), ("W", "W"), ("X1", "X1"), ("A1", "A1"), ("X2", "X2"), ("A2", "A2")],
        &[("S1", "SA1"), ("S2", "SA2")],
    )?;
    let wb_spec = spec.derive(
        ScenarioKind::Wigner,
        &[("Z", "Z"), ("W", "W"), ("X1", "Y1"), ("A1", "B1"), ("X2", "Y2"), ("A2", "B2")],
        &[("S1", "SB1"), ("S2", "SB2")],
    )?;
    let bell = classify_bell(&bell_spec, None, tol)?;
    let wigner_a = classify_wigner(&wa_spec, tol)?;
    let wigner_b = classify_wigner(&wb_spec, tol)?;
    let holds = bell.holds && (wigner_a.holds || wigner_b.holds);
    let names = ["Z", "A1", "A2", "B1", "B2"];
    let placed: Vec<PlacedDecomp> = names.iter().map(|r| spec.role(r).cloned()).collect::<Result<_>>()?;
    let g = influence_graph(&spec.circuit, &placed, tol)?;
    let mut structure = detect_structure(&g, &role_map(&names))?;
    structure.reduction = bell.structure.reduction;
    Ok(LocalFriendlinessReport { holds, bell, wigner_a, wigner_b, structure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ProjDecomp;
    use crate::scenarios::models::{
        bell_instance, build_wigners_friend, complementarity_instance, local_friendliness_instance, pbr_instance,
    };

    const TOL: f64 = 1e-9;

    fn trivialize(spec: &ScenarioSpec) -> ScenarioSpec {
        let mut s = spec.clone();
        for p in s.roles.values_mut() {
            p.decomp = ProjDecomp::trivial(p.decomp.dim());
        }
        s
    }

    #[test]
    fn complementarity_examples() {
        let spec = complementarity_instance().unwrap();
        let r = classify_complementarity(&spec, TOL).unwrap();
        assert!(r.holds && r.witness.is_some() && r.prep_to_outcome);
        assert!(!classify_complementarity(&trivialize(&spec), TOL).unwrap().holds);
    }

    #[test]
    fn wigner_examples() {
        let wf = build_wigners_friend().unwrap();
        let r = classify_wigner(&wf.spec(true).unwrap(), TOL).unwrap();
        assert!(r.holds && r.structure.chain());
        assert!(!classify_wigner(&wf.spec(false).unwrap(), TOL).unwrap().holds);
        assert!(!classify_wigner(&trivialize(&wf.spec(true).unwrap()), TOL).unwrap().holds);
    }

    #[test]
    fn bell_examples() {
        let r = classify_bell(&bell_instance(true).unwrap().spec, Some((0, None)), TOL).unwrap();
        assert!(r.holds && r.fork_a && r.fork_b);
        assert!((r.chsh.unwrap() - 2.0 * core::f64::consts::SQRT_2).abs() < 1e-6);
        assert_eq!(r.reduction, Some(ReductionOutcome::NoReductionFound));
        assert!(!classify_bell(&bell_instance(false).unwrap().spec, None, TOL).unwrap().holds);
    }

    #[test]
    fn bell_rejects_signalling_constraint() {
        let mut spec = bell_instance(true).unwrap().spec;
        spec.constraints.push(super::super::Constraint::new("x", "a"));
        assert!(matches!(classify_bell(&spec, None, TOL), Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn pbr_examples() {
        let spec = pbr_instance().unwrap();
        let r = classify_pbr(&spec, PbrEvents::default(), TOL).unwrap();
        assert!(r.holds && r.collider_x && r.collider_y, "{r:?}");
        assert!(r.overlap_norm > 1e-3);
        let orth = PbrEvents { rho2: (0, 1), sigma2: (0, 1), ..PbrEvents::default() };
        assert!(!classify_pbr(&spec, orth, TOL).unwrap().overlap);
        let zero = PbrEvents { rho: (0, 0), rho2: (0, 0), sigma: (0, 0), sigma2: (0, 0) };
        assert!(!classify_pbr(&trivialize(&spec), zero, TOL).unwrap().exclusion);
    }

    #[test]
    fn local_friendliness_examples() {
        let r = classify_local_friendliness(&local_friendliness_instance(true, true).unwrap(), TOL).unwrap();
        assert!(r.holds && r.structure.fork() && r.structure.chain(), "{:?}", r.structure);
        assert!(!classify_local_friendliness(&local_friendliness_instance(false, true).unwrap(), TOL).unwrap().holds);
        assert!(!classify_local_friendliness(&local_friendliness_instance(true, false).unwrap(), TOL).unwrap().holds);
    }
}
