//! Reductions of forks and colliders into independent factors.
//!
//! A witness splits the source decomposition `Z` (and the sink `W`, when
//! present) into commuting factor decompositions attached to the two
//! wings, together with maps recovering each original projector from
//! products of factor projectors. A witness is valid when the factors
//! commute, reconstruct the originals, and satisfy the four no-influence
//! conditions of the chosen mode.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ScenarioSpec;
use crate::algebra::ProjDecomp;
use crate::influence::{heisenberg_projectors, max_commutator, PlacedDecomp};
use crate::linalg::{herm_eig, ComplexMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMode {
    /// `A ← Z → B`.
    Fork,
    /// `X → W ← Y`.
    Collider,
}

impl ReductionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionMode::Fork => "fork",
            ReductionMode::Collider => "collider",
        }
    }
}

/// Factor decompositions of `Z` and `W` with their recovery maps.
/// `z_map[m][n] = Some(i)` when `P_{Z(A)}^m P_{Z(B)}^n` is a summand of
/// `P_Z^i`; `None` marks a vanishing product. `W` factors are absent when
/// the spec has no `W` role.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionWitness {
    pub z_a: ProjDecomp,
    pub z_b: ProjDecomp,
    pub w_a: Option<ProjDecomp>,
    pub w_b: Option<ProjDecomp>,
    pub z_map: Vec<Vec<Option<usize>>>,
    pub w_map: Vec<Vec<Option<usize>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionCheck {
    pub valid: bool,
    /// The first failed condition.
    pub failed: Option<String>,
}

impl ReductionCheck {
    fn pass() -> Self {
        ReductionCheck { valid: true, failed: None }
    }

    fn fail(why: String) -> Self {
        ReductionCheck { valid: false, failed: Some(why) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReductionOutcome {
    Found(ReductionWitness),
    /// The heuristic search found nothing; this is not a proof of
    /// irreducibility.
    NoReductionFound,
}

impl ReductionOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, ReductionOutcome::Found(_))
    }
}

fn check_map(
    name: &str,
    orig: &ProjDecomp,
    fa: &ProjDecomp,
    fb: &ProjDecomp,
    map: &[Vec<Option<usize>>],
    tol: f64,
) -> Result<Option<String>> {
    if fa.dim() != orig.dim() || fb.dim() != orig.dim() {
        return Err(Error::DimensionMismatch(format!("{name} factors do not match the dimension of {name}")));
    }
    if map.len() != fa.len() || map.iter().any(|r| r.len() != fb.len()) {
        return Err(Error::InvalidArgument(format!("{name} map must be {}x{}", fa.len(), fb.len())));
    }
    if map.iter().flatten().flatten().any(|&i| i >= orig.len()) {
        return Err(Error::InvalidArgument(format!("{name} map points past the {} projectors", orig.len())));
    }
    for (m, p) in fa.projectors().iter().enumerate() {
        for (n, q) in fb.projectors().iter().enumerate() {
            if p.commutator(q).max_abs() > tol {
                return Ok(Some(format!("{name} factors {m} and {n} do not commute")));
            }
        }
    }
    let mut sums: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(orig.dim(), orig.dim()); orig.len()];
    for (m, p) in fa.projectors().iter().enumerate() {
        for (n, q) in fb.projectors().iter().enumerate() {
            let prod = p.matmul(q);
            match map[m][n] {
                Some(i) => sums[i] = &sums[i] + &prod,
                None if prod.max_abs() > tol => {
                    return Ok(Some(format!("{name} product ({m}, {n}) is unassigned but nonzero")));
                }
                None => {}
            }
        }
    }
    for (i, (s, p)) in sums.iter().zip(orig.projectors()).enumerate() {
        if s.max_diff(p) > tol {
            return Ok(Some(format!("{name} projector {i} is not reconstructed")));
        }
    }
    Ok(None)
}

fn heis(spec: &ScenarioSpec, d: &ProjDecomp, at: &PlacedDecomp) -> Result<Vec<ComplexMatrix>> {
    let p = PlacedDecomp::new(d.clone(), at.at.clone());
    Ok(heisenberg_projectors(&spec.circuit, &[p])?.remove(0))
}

/// Checks commutation, reconstruction and the mode's four no-influence
/// conditions.
pub fn verify_reduction(spec: &ScenarioSpec, w: &ReductionWitness, mode: ReductionMode, tol: f64) -> Result<ReductionCheck> {
    let z = spec.role("Z")?;
    if let Some(why) = check_map("Z", &z.decomp, &w.z_a, &w.z_b, &w.z_map, tol)? {
        return Ok(ReductionCheck::fail(why));
    }
    let wr = spec.optional_role("W");
    let trivial_w = |d: &Option<ProjDecomp>| d.as_ref().map(|d| d.is_trivial()).unwrap_or(true);
    let (wa, wb) = match (wr, &w.w_a, &w.w_b) {
        (Some(role), Some(wa), Some(wb)) => {
            if let Some(why) = check_map("W", &role.decomp, wa, wb, &w.w_map, tol)? {
                return Ok(ReductionCheck::fail(why));
            }
            (heis(spec, wa, role)?, heis(spec, wb, role)?)
        }
        (Some(_), _, _) => return Err(Error::InvalidArgument("witness lacks W factors".into())),
        (None, _, _) if trivial_w(&w.w_a) && trivial_w(&w.w_b) => (Vec::new(), Vec::new()),
        (None, _, _) => return Err(Error::InvalidArgument("witness has W factors but the spec has no W".into())),
    };
    let za = heis(spec, &w.z_a, z)?;
    let zb = heis(spec, &w.z_b, z)?;
    let role_h = |r: &str| -> Result<Vec<ComplexMatrix>> {
        let p = spec.role(r)?;
        heis(spec, &p.decomp, p)
    };
    let conditions: Vec<(&str, Vec<ComplexMatrix>, Vec<ComplexMatrix>)> = match mode {
        ReductionMode::Fork => vec![
            ("Z(A) -> W(B)", za.clone(), wb.clone()),
            ("Z(A) -> B", za, role_h("B")?),
            ("Z(B) -> W(A)", zb.clone(), wa.clone()),
            ("Z(B) -> A", zb, role_h("A")?),
        ],
        ReductionMode::Collider => vec![
            ("X -> W(B)", role_h("X")?, wb.clone()),
            ("Z(A) -> W(B)", za, wb),
            ("Y -> W(A)", role_h("Y")?, wa.clone()),
            ("Z(B) -> W(A)", zb, wa),
        ],
    };
    for (name, l, r) in &conditions {
        if max_commutator(l, r, tol).present {
            return Ok(ReductionCheck::fail(format!("influence {name}")));
        }
    }
    Ok(ReductionCheck::pass())
}

/// A partition of projector indices into classes.
type Partition = Vec<Vec<usize>>;

/// Finest coarse-graining of `proj` (Heisenberg frame) whose elements all
/// commute with every operator in `against`. Coefficient vectors `c` with
/// `Σ c_i [P_i, Q] = 0` form an algebra of functions on the indices, so the
/// classes are the level sets shared by all kernel vectors.
fn commuting_classes(proj: &[ComplexMatrix], against: &[ComplexMatrix], tol: f64) -> Result<Partition> {
    let k = proj.len();
    let comms: Vec<Vec<ComplexMatrix>> = against.iter().map(|q| proj.iter().map(|p| p.commutator(q)).collect()).collect();
    let gram = ComplexMatrix::from_fn(k, k, |i, j| comms.iter().map(|row| row[i].hs_inner(&row[j])).sum());
    let pairs = herm_eig(&gram, 1e-6)?;
    let scale = pairs.iter().map(|p| p.value.abs()).fold(1.0, f64::max);
    let cut = (tol * tol).max(1e-24) * scale * 1e2;
    let kernel: Vec<Vec<crate::C64>> = pairs.into_iter().filter(|p| p.value <= cut).map(|p| p.vector).collect();
    let mut classes: Partition = Vec::new();
    let mut assigned = vec![false; k];
    for i in 0..k {
        if assigned[i] {
            continue;
        }
        let mut class = vec![i];
        assigned[i] = true;
        for j in i + 1..k {
            if !assigned[j] && kernel.iter().all(|v| (v[i] - v[j]).norm() < 1e-6) {
                class.push(j);
                assigned[j] = true;
            }
        }
        classes.push(class);
    }
    Ok(classes)
}

fn discrete(k: usize) -> Partition {
    (0..k).map(|i| vec![i]).collect()
}

fn whole(k: usize) -> Partition {
    vec![(0..k).collect()]
}

fn sum_classes(proj: &[ComplexMatrix], part: &Partition) -> Vec<ComplexMatrix> {
    if proj.is_empty() {
        return Vec::new();
    }
    part.iter()
        .map(|c| c.iter().skip(1).fold(proj[c[0]].clone(), |acc, &i| &acc + &proj[i]))
        .collect()
}

/// Recovery map when every pair of classes meets in at most one index.
fn pair_map(a: &Partition, b: &Partition) -> Option<Vec<Vec<Option<usize>>>> {
    let mut map = vec![vec![None; b.len()]; a.len()];
    for (m, ca) in a.iter().enumerate() {
        let sa: BTreeSet<usize> = ca.iter().copied().collect();
        for (n, cb) in b.iter().enumerate() {
            let common: Vec<usize> = cb.iter().copied().filter(|i| sa.contains(i)).collect();
            match common.len() {
                0 => {}
                1 => map[m][n] = Some(common[0]),
                _ => return None,
            }
        }
    }
    Some(map)
}

struct Frame {
    z: Vec<ComplexMatrix>,
    w: Vec<ComplexMatrix>,
    left: Vec<ComplexMatrix>,
    right: Vec<ComplexMatrix>,
}

/// Class structure of `(Z(A), Z(B), W(A), W(B))`.
#[derive(Clone, PartialEq)]
struct Split {
    za: Partition,
    zb: Partition,
    wa: Partition,
    wb: Partition,
}

impl Split {
    /// One round of refinement: each factor becomes the finest
    /// coarse-graining allowed by the conditions it takes part in.
    fn refine(&self, f: &Frame, mode: ReductionMode, tol: f64) -> Result<Split> {
        let za_ops = sum_classes(&f.z, &self.za);
        let zb_ops = sum_classes(&f.z, &self.zb);
        let wa_ops = sum_classes(&f.w, &self.wa);
        let wb_ops = sum_classes(&f.w, &self.wb);
        let cat = |a: &[ComplexMatrix], b: &[ComplexMatrix]| -> Vec<ComplexMatrix> { a.iter().chain(b).cloned().collect() };
        Ok(match mode {
            // Z(A) avoids B and W(B); Z(B) avoids A and W(A); W(A) avoids Z(B); W(B) avoids Z(A).
            ReductionMode::Fork => Split {
                za: commuting_classes(&f.z, &cat(&f.right, &wb_ops), tol)?,
                zb: commuting_classes(&f.z, &cat(&f.left, &wa_ops), tol)?,
                wa: commuting_classes(&f.w, &zb_ops, tol)?,
                wb: commuting_classes(&f.w, &za_ops, tol)?,
            },
            // W(B) avoids X and Z(A); W(A) avoids Y and Z(B); Z(A) avoids W(B); Z(B) avoids W(A).
            ReductionMode::Collider => Split {
                za: commuting_classes(&f.z, &wb_ops, tol)?,
                zb: commuting_classes(&f.z, &wa_ops, tol)?,
                wa: commuting_classes(&f.w, &cat(&f.right, &zb_ops), tol)?,
                wb: commuting_classes(&f.w, &cat(&f.left, &za_ops), tol)?,
            },
        })
    }
}

fn witness_from(spec: &ScenarioSpec, s: &Split) -> Result<Option<ReductionWitness>> {
    let z = &spec.role("Z")?.decomp;
    let (Some(z_map), w_map) = (pair_map(&s.za, &s.zb), pair_map(&s.wa, &s.wb)) else {
        return Ok(None);
    };
    let (w_a, w_b, w_map) = match spec.optional_role("W") {
        Some(w) => match w_map {
            Some(m) => (Some(w.decomp.coarse_grain(&s.wa)?), Some(w.decomp.coarse_grain(&s.wb)?), m),
            None => return Ok(None),
        },
        None => (None, None, Vec::new()),
    };
    Ok(Some(ReductionWitness { z_a: z.coarse_grain(&s.za)?, z_b: z.coarse_grain(&s.zb)?, w_a, w_b, z_map, w_map }))
}

/// Heuristic search over coarse-grainings of `Z` and `W`.
///
/// Candidates are the two trivial splits and the fixed points of
/// [`Split::refine`] started from each side's finest split. The search is
/// deterministic; `seed` is accepted for interface stability.
pub fn search_reduction(spec: &ScenarioSpec, mode: ReductionMode, tol: f64, seed: u64) -> Result<ReductionOutcome> {
    let _ = seed;
    let z = spec.role("Z")?;
    let w = spec.optional_role("W");
    if mode == ReductionMode::Collider && w.is_none() {
        return Err(Error::Role("collider reduction needs a W role".into()));
    }
    let (l, r) = match mode {
        ReductionMode::Fork => ("A", "B"),
        ReductionMode::Collider => ("X", "Y"),
    };
    let mut placed = vec![z.clone(), spec.role(l)?.clone(), spec.role(r)?.clone()];
    placed.extend(w.cloned());
    let mut h = heisenberg_projectors(&spec.circuit, &placed)?;
    let frame = Frame {
        w: if h.len() == 4 { h.pop().unwrap_or_default() } else { Vec::new() },
        right: h.pop().unwrap_or_default(),
        left: h.pop().unwrap_or_default(),
        z: h.pop().unwrap_or_default(),
    };
    let (kz, kw) = (frame.z.len(), frame.w.len().max(1));
    let mut candidates = vec![
        Split { za: discrete(kz), zb: whole(kz), wa: discrete(kw), wb: whole(kw) },
        Split { za: whole(kz), zb: discrete(kz), wa: whole(kw), wb: discrete(kw) },
        Split { za: discrete(kz), zb: whole(kz), wa: whole(kw), wb: discrete(kw) },
        Split { za: whole(kz), zb: discrete(kz), wa: discrete(kw), wb: whole(kw) },
    ];
    for start in [
        Split { za: discrete(kz), zb: discrete(kz), wa: whole(kw), wb: whole(kw) },
        Split { za: whole(kz), zb: whole(kz), wa: discrete(kw), wb: discrete(kw) },
    ] {
        let mut s = start;
        for _ in 0..16 {
            let next = s.refine(&frame, mode, tol)?;
            if next == s {
                break;
            }
            s = next;
        }
        candidates.push(s);
    }
    for s in &candidates {
        let s = if frame.w.is_empty() { Split { wa: whole(1), wb: whole(1), ..s.clone() } } else { s.clone() };
        if let Some(wit) = witness_from(spec, &s)? {
            if verify_reduction(spec, &wit, mode, tol)?.valid {
                return Ok(ReductionOutcome::Found(wit));
            }
        }
    }
    Ok(ReductionOutcome::NoReductionFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::models::bell_instance;

    #[test]
    fn product_preparation_is_reducible() {
        let spec = bell_instance(false).unwrap().spec;
        let ReductionOutcome::Found(w) = search_reduction(&spec, ReductionMode::Fork, 1e-9, 0).unwrap() else {
            panic!("expected a witness");
        };
        assert!(verify_reduction(&spec, &w, ReductionMode::Fork, 1e-9).unwrap().valid);
        assert_eq!(w.z_a.len(), 2);
    }

    #[test]
    fn chsh_preparation_has_no_reduction() {
        let spec = bell_instance(true).unwrap().spec;
        assert_eq!(search_reduction(&spec, ReductionMode::Fork, 1e-9, 0).unwrap(), ReductionOutcome::NoReductionFound);
    }

    #[test]
    fn failed_commutation_is_named() {
        let spec = bell_instance(false).unwrap().spec;
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let x = ProjDecomp::from_unitary_columns(&ComplexMatrix::from_real(2, &[h, h, h, -h]));
        let zx = ProjDecomp::new(
            x.projectors().iter().map(|p| crate::linalg::kron(p, &ComplexMatrix::identity(2)).unwrap()).collect(),
            1e-9,
        )
        .unwrap();
        let w = ReductionWitness {
            z_a: ProjDecomp::computational(4),
            z_b: zx,
            w_a: None,
            w_b: None,
            z_map: vec![vec![Some(0); 2]; 4],
            w_map: Vec::new(),
        };
        let check = verify_reduction(&spec, &w, ReductionMode::Fork, 1e-9).unwrap();
        assert!(!check.valid);
        assert!(check.failed.unwrap().contains("commute"));
    }
}
