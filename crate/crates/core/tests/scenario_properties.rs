//! Scenario models: event statistics of the worked circuits, instrument
//! reproduction, and the necessity direction of the complementarity and
//! chain classifications on random instances.

use qce_core::algebra::ProjDecomp;
use qce_core::circuit::{Circuit, CircuitBuilder, Placement, Side};
use qce_core::histories::{consistency_check, history_distribution, preferred_distribution, HistoryDistribution};
use qce_core::influence::PlacedDecomp;
use qce_core::linalg::haar_random_unitary;
use qce_core::preference::preferred_set;
use qce_core::rng::Rng;
use qce_core::scenarios::{
    build_instrument_model, build_prepare_measure, build_wigners_friend, classify_complementarity, classify_wigner,
    compose_instruments, instrument_conditionals, Composition, Instrument, PrepareMeasure, ScenarioKind, ScenarioSpec,
    WignersFriend,
};
use qce_core::ComplexMatrix;

/// Position of `at` in the table and, per computational value `k`, the index
/// of the projector `|k⟩⟨k|`.
fn computational_slot(dist: &HistoryDistribution, at: &Placement) -> (usize, Vec<usize>) {
    let pos = dist.position(&at.wire, at.side).expect("placement present");
    let decomp = &dist.placed[pos].decomp;
    let d = decomp.dim();
    assert!(decomp.distance(&ProjDecomp::computational(d)) <= 1e-9, "{} is not computational", at.wire);
    let idx = (0..d)
        .map(|k| {
            let target = ComplexMatrix::basis_projector(d, k);
            decomp.projectors().iter().position(|p| p.max_diff(&target) <= 1e-9).unwrap()
        })
        .collect();
    (pos, idx)
}

#[test]
fn prepare_measure_transition_probabilities() {
    for seed in 0..20u64 {
        let u = haar_random_unitary(2, 1000 + seed);
        let pm = build_prepare_measure(&u).unwrap();
        let ps = preferred_set(&pm.basic, &pm.basic_bubble, 1e-9, 0).unwrap();
        let dist = preferred_distribution(&pm.basic, &ps).unwrap();
        let (p1, z1) = computational_slot(&dist, &PrepareMeasure::z1());
        let (p2, z2) = computational_slot(&dist, &PrepareMeasure::z2());
        for j in 0..2 {
            let pj = dist.event_probability(&[(p1, z1[j])]).unwrap();
            assert!((pj - 0.5).abs() <= 1e-9, "seed {seed}: p(z1={j}) = {pj}");
            for k in 0..2 {
                let joint = dist.event_probability(&[(p1, z1[j]), (p2, z2[k])]).unwrap();
                let expected = u[(k, j)].norm_sqr();
                assert!((joint / pj - expected).abs() <= 1e-9, "seed {seed}: p({k}|{j})");
            }
        }
    }
}

#[test]
fn extended_model_records_agree() {
    let u = haar_random_unitary(2, 77);
    let pm = build_prepare_measure(&u).unwrap();
    let ps = preferred_set(&pm.extended, &pm.bubble2, 1e-9, 0).unwrap();
    let dist = preferred_distribution(&pm.extended, &ps).unwrap();
    let slot = |p: Placement| computational_slot(&dist, &p);
    let parity = |a: Placement, b: Placement, c: Placement| -> f64 {
        let (sa, sb, sc) = (slot(a), slot(b), slot(c));
        let mut total = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                total += dist.event_probability(&[(sa.0, sa.1[x ^ y]), (sb.0, sb.1[x]), (sc.0, sc.1[y])]).unwrap();
            }
        }
        total
    };
    let first = parity(PrepareMeasure::z1(), PrepareMeasure::z3(), PrepareMeasure::z4());
    let second = parity(PrepareMeasure::z2(), PrepareMeasure::z5(), PrepareMeasure::z6());
    assert!((first - 1.0).abs() <= 1e-9, "{first}");
    assert!((second - 1.0).abs() <= 1e-9, "{second}");
}

#[test]
fn wigners_friend_preferred_sets() {
    let wf = build_wigners_friend().unwrap();
    let at = WignersFriend::friend_outcome();
    let ps1 = preferred_set(&wf.circuit, &wf.bubble1, 1e-9, 0).unwrap();
    let ps2 = preferred_set(&wf.circuit, &wf.bubble2, 1e-9, 0).unwrap();
    let e1 = ps1.entry(&at.wire, at.side).unwrap();
    let e2 = ps2.entry(&at.wire, at.side).unwrap();
    assert!(e1.decomp.distance(&ProjDecomp::computational(2)) <= 1e-9);
    assert!(e2.decomp.is_trivial());
    assert!(consistency_check(&wf.circuit, &ps1.entries, 1e-8).unwrap().consistent);
    assert!(consistency_check(&wf.circuit, &ps2.entries, 1e-8).unwrap().consistent);
}

fn maximally_mixed(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d).scale_real(1.0 / d as f64)
}

#[test]
fn instrument_models_reproduce_outcome_statistics() {
    for seed in 0..50u64 {
        let mut rng = Rng::derived(seed, 1);
        let (d_in, d_out) = (1 + rng.below(3), 1 + rng.below(3));
        let outcomes = 1 + rng.below(3);
        // Two Kraus operators only when the input is not a preparation; this
        // keeps the dilation ancilla at dimension 9 or less.
        let kraus = if d_in > 1 { 1 + rng.below(2) } else { 1 };
        let kraus = kraus.max(d_in.div_ceil(outcomes * d_out));
        let inst = Instrument::random(d_in, d_out, outcomes, kraus, seed).unwrap();
        let model = build_instrument_model(&inst, "").unwrap();
        let got = instrument_conditionals(&model).unwrap();
        let rho = maximally_mixed(d_in);
        for g in 0..outcomes {
            let expected = inst.apply(g, &rho).trace().re;
            assert!((got[g] - expected).abs() <= 1e-8, "seed {seed}, outcome {g}: {} vs {expected}", got[g]);
        }
    }
}

#[test]
fn sequential_instruments_compose() {
    for seed in 0..20u64 {
        let mut rng = Rng::derived(seed, 2);
        let d0 = 1 + rng.below(2);
        let d1 = 1 + rng.below(2);
        let d2 = 1 + rng.below(2);
        let n1 = (1 + rng.below(2)).max(d0.div_ceil(d1));
        let n2 = (1 + rng.below(2)).max(d1.div_ceil(d2));
        let first = Instrument::random(d0, d1, n1, 1, 100 + seed).unwrap();
        let second = Instrument::random(d1, d2, n2, 1, 200 + seed).unwrap();
        let m1 = build_instrument_model(&first, "l").unwrap();
        let m2 = build_instrument_model(&second, "r").unwrap();
        let model = compose_instruments(&m1, &m2, Composition::Sequential).unwrap();
        let got = instrument_conditionals(&model).unwrap();
        let rho = maximally_mixed(d0);
        for g1 in 0..first.outcomes() {
            let mid = first.apply(g1, &rho);
            for g2 in 0..second.outcomes() {
                let expected = second.apply(g2, &mid).trace().re;
                let v = got[g1 * second.outcomes() + g2];
                assert!((v - expected).abs() <= 1e-8, "seed {seed}: ({g1},{g2}) {v} vs {expected}");
            }
        }
    }
}

fn computational_at(d: usize, wire: &str, side: Side) -> PlacedDecomp {
    PlacedDecomp::new(ProjDecomp::computational(d), Placement::new(wire, side))
}

fn random_complementarity(seed: u64) -> ScenarioSpec {
    let mut rng = Rng::derived(seed, 3);
    let ds = 2 + rng.below(2);
    let dz = 2 + rng.below(2);
    let dx = 2 + rng.below(2);
    let c: Circuit = CircuitBuilder::new()
        .wire("z", dz)
        .wire("g", ds)
        .wire("s", ds)
        .wire("w", dz)
        .wire("x", dx)
        .wire("f", ds)
        .wire("a", dx)
        .gate("U", &["z", "g"], &["s", "w"], haar_random_unitary(dz * ds, 10 * seed + 1))
        .gate("V", &["s", "x"], &["f", "a"], haar_random_unitary(ds * dx, 10 * seed + 2))
        .build()
        .unwrap();
    ScenarioSpec::new(ScenarioKind::Complementarity, c)
        .with_role("Z", computational_at(dz, "z", Side::In))
        .with_role("W", computational_at(dz, "w", Side::Out))
        .with_role("X", computational_at(dx, "x", Side::In))
        .with_role("A", computational_at(dx, "a", Side::Out))
        .with_system("S", &["s"])
}

#[test]
fn complementarity_requires_preparation_influence() {
    let mut held = 0;
    for seed in 0..60u64 {
        let rep = classify_complementarity(&random_complementarity(seed), 1e-8).unwrap();
        if rep.holds {
            held += 1;
            assert!(rep.prep_to_outcome, "seed {seed}");
        }
    }
    assert!(held > 0);
}

fn random_wigner(seed: u64) -> ScenarioSpec {
    let mut rng = Rng::derived(seed, 4);
    let ds = 2 + rng.below(2);
    let c: Circuit = CircuitBuilder::new()
        .wire("s1", ds)
        .wire("s2", ds)
        .wire("s3", ds)
        .wire("s4", ds)
        .wires(&["m0", "m1", "m2", "w0", "w1"], 2)
        .gate("H", &["s1"], &["s2"], haar_random_unitary(ds, 10 * seed + 1))
        .gate("F", &["s2", "m0"], &["s3", "m1"], haar_random_unitary(2 * ds, 10 * seed + 2))
        .gate("G", &["s3", "m1", "w0"], &["s4", "m2", "w1"], haar_random_unitary(4 * ds, 10 * seed + 3))
        .build()
        .unwrap();
    ScenarioSpec::new(ScenarioKind::Wigner, c)
        .with_role("Z", computational_at(ds, "s1", Side::In))
        .with_role("X1", computational_at(2, "m0", Side::In))
        .with_role("A1", computational_at(2, "m1", Side::Out))
        .with_role("X2", computational_at(2, "w0", Side::In))
        .with_role("A2", computational_at(2, "w1", Side::Out))
        .with_system("S1", &["s2"])
        .with_system("S2", &["s3", "m1"])
}

#[test]
fn wigner_scenarios_require_a_chain() {
    let mut held = 0;
    for seed in 0..40u64 {
        let rep = classify_wigner(&random_wigner(seed), 1e-8).unwrap();
        if rep.holds {
            held += 1;
            assert!(rep.first.prep_to_outcome && rep.second.prep_to_outcome, "seed {seed}");
            assert!(rep.structure.chain(), "seed {seed}");
        }
    }
    assert!(held > 0);
}

#[test]
fn history_tables_ignore_unrelated_roles() {
    let spec = random_complementarity(5);
    let placed: Vec<PlacedDecomp> = ["Z", "A"].iter().map(|r| spec.role(r).unwrap().clone()).collect();
    let dist = history_distribution(&spec.circuit, &placed).unwrap();
    assert!((dist.total() - 1.0).abs() <= 1e-9);
}
