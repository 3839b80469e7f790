//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::process::Command;
use std::time::{Duration, Instant};

use qce_core::algebra::ProjDecomp;
use qce_core::circuit::Placement;
use qce_core::fixtures::{random_bubble, random_circuit, random_influence_instance};
use qce_core::histories::{consistency_check, history_tables, preferred_distribution, HistoryDistribution};
use qce_core::influence::{interference_influence, phase_signal_oracle, standard_phase_grid, ChannelSplit};
use qce_core::linalg::{haar_random_unitary, kron};
use qce_core::preference::{check_influence_pattern, preferred_decomposition, preferred_set};
use qce_core::rng::Rng;
use qce_core::scenarios::{
    bell_instance, build_instrument_model, build_prepare_measure, build_wigners_friend, classify_bell, classify_pbr,
    compose_instruments, instrument_conditionals, operational_three_box, pbr_instance, search_reduction,
    shift_unitary, three_box_check, three_box_triplets, verify_reduction, Composition, Instrument, PbrEvents,
    PrepareMeasure, ReductionMode, ReductionOutcome, WignersFriend,
};
use qce_core::{c64, ComplexMatrix, C64};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn thm1_equivalence() -> Check {
    let start = Instant::now();
    for seed in 0..200u64 {
        let inst = random_influence_instance(seed).map_err(err)?;
        let algebraic = interference_influence(&inst.channel, &inst.pa, &inst.pd, 1e-8).map_err(err)?.present;
        let grid = standard_phase_grid(inst.pa.len(), 6, seed);
        let operational = phase_signal_oracle(&inst.channel, &inst.pa, &inst.pd, &grid, 1e-8).map_err(err)?;
        ensure!(algebraic == operational, "instance {seed} disagrees");
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(60), "took {t:?}");
    Ok(format!("200 instances agree in {:.2}s", t.as_secs_f64()))
}

fn shift_preference() -> Check {
    let mut worst: f64 = 0.0;
    for d in 2..=4 {
        let ch = ChannelSplit::new(shift_unitary(d), (d, d), (d, d), 1e-12).map_err(err)?;
        let p = preferred_decomposition(&ch, 1e-9, 0).map_err(err)?;
        worst = worst.max(p.distance(&ProjDecomp::computational(d)));
    }
    ensure!(worst <= 1e-10, "distance {worst:e}");
    Ok(format!("max projector distance {worst:.1e}"))
}

/// Position of `at` and the projector index of each computational value.
fn slot(dist: &HistoryDistribution, at: &Placement) -> Result<(usize, Vec<usize>), String> {
    let pos = dist.position(&at.wire, at.side).ok_or("placement missing")?;
    let d = &dist.placed[pos].decomp;
    let idx = (0..d.dim())
        .map(|k| {
            let target = ComplexMatrix::basis_projector(d.dim(), k);
            d.projectors().iter().position(|p| p.max_diff(&target) <= 1e-9).ok_or(format!("{} not computational", at.wire))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((pos, idx))
}

fn prepare_measure() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let u = haar_random_unitary(2, 500 + seed);
        let pm = build_prepare_measure(&u).map_err(err)?;
        let ps = preferred_set(&pm.basic, &pm.basic_bubble, 1e-9, 0).map_err(err)?;
        let dist = preferred_distribution(&pm.basic, &ps).map_err(err)?;
        let (p1, z1) = slot(&dist, &PrepareMeasure::z1())?;
        let (p2, z2) = slot(&dist, &PrepareMeasure::z2())?;
        for j in 0..2 {
            let pj = dist.event_probability(&[(p1, z1[j])]).map_err(err)?;
            worst = worst.max((pj - 0.5).abs());
            for k in 0..2 {
                let joint = dist.event_probability(&[(p1, z1[j]), (p2, z2[k])]).map_err(err)?;
                worst = worst.max((joint / pj - u[(k, j)].norm_sqr()).abs());
            }
        }
    }
    ensure!(worst <= 1e-9, "deviation {worst:e}");
    Ok(format!("20 unitaries, max deviation {worst:.1e}"))
}

fn extended_parity() -> Check {
    let pm = build_prepare_measure(&haar_random_unitary(2, 42)).map_err(err)?;
    let ps = preferred_set(&pm.extended, &pm.bubble2, 1e-9, 0).map_err(err)?;
    let dist = preferred_distribution(&pm.extended, &ps).map_err(err)?;
    let parity = |a: Placement, b: Placement, c: Placement| -> Result<f64, String> {
        let (sa, sb, sc) = (slot(&dist, &a)?, slot(&dist, &b)?, slot(&dist, &c)?);
        let mut total = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                total += dist.event_probability(&[(sa.0, sa.1[x ^ y]), (sb.0, sb.1[x]), (sc.0, sc.1[y])]).map_err(err)?;
            }
        }
        Ok(total)
    };
    let first = parity(PrepareMeasure::z1(), PrepareMeasure::z3(), PrepareMeasure::z4())?;
    let second = parity(PrepareMeasure::z2(), PrepareMeasure::z5(), PrepareMeasure::z6())?;
    ensure!((first - 1.0).abs() <= 1e-9 && (second - 1.0).abs() <= 1e-9, "parities {first}, {second}");
    Ok(format!("p(z1=z3^z4) = {first:.12}, p(z2=z5^z6) = {second:.12}"))
}

fn wigners_friend() -> Check {
    let wf = build_wigners_friend().map_err(err)?;
    let at = WignersFriend::friend_outcome();
    let ps1 = preferred_set(&wf.circuit, &wf.bubble1, 1e-9, 0).map_err(err)?;
    let ps2 = preferred_set(&wf.circuit, &wf.bubble2, 1e-9, 0).map_err(err)?;
    let e1 = ps1.entry(&at.wire, at.side).ok_or("friend entry missing")?;
    let e2 = ps2.entry(&at.wire, at.side).ok_or("friend entry missing")?;
    let dz = e1.decomp.distance(&ProjDecomp::computational(2));
    ensure!(dz <= 1e-9, "first bubble entry is not Z (distance {dz:e})");
    ensure!(e2.decomp.is_trivial(), "second bubble entry is not trivial");
    let c1 = consistency_check(&wf.circuit, &ps1.entries, 1e-8).map_err(err)?;
    let c2 = consistency_check(&wf.circuit, &ps2.entries, 1e-8).map_err(err)?;
    ensure!(c1.consistent && c2.consistent, "consistency {} / {}", c1.max_off_diagonal, c2.max_off_diagonal);
    Ok(format!("Z then {{I}}; off-diagonals {:.1e}, {:.1e}", c1.max_off_diagonal, c2.max_off_diagonal))
}

fn random_instances() -> impl Iterator<Item = u64> {
    0..100u64
}

fn history_suite() -> Check {
    let (mut gap, mut off, mut norm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut structured = 0;
    for seed in random_instances() {
        let c = random_circuit(seed, 5, 3).map_err(err)?;
        let b = random_bubble(&c, seed, 3).map_err(err)?;
        let ps = preferred_set(&c, &b, 1e-9, seed).map_err(err)?;
        if ps.entries.iter().filter(|e| !e.decomp.is_trivial()).count() >= 2 {
            structured += 1;
        }
        let (dist, sandwich) = history_tables(&c, &ps.entries).map_err(err)?;
        for (p, q) in dist.probs.iter().zip(&sandwich) {
            gap = gap.max((p - q).abs());
        }
        norm = norm.max((dist.total() - 1.0).abs());
        off = off.max(consistency_check(&c, &ps.entries, 1e-8).map_err(err)?.max_off_diagonal);
    }
    ensure!(gap <= 1e-9 && off <= 1e-8 && norm <= 1e-8, "gap {gap:e}, off-diagonal {off:e}, norm {norm:e}");
    ensure!(structured >= 20, "only {structured} instances have two or more nontrivial decompositions");
    Ok(format!(
        "100 instances ({structured} with >=2 nontrivial decompositions): forms {gap:.1e}, off-diagonal {off:.1e}, normalisation {norm:.1e}"
    ))
}

fn pattern_suite() -> Check {
    let mut edges = 0;
    for seed in random_instances() {
        let c = random_circuit(seed, 5, 3).map_err(err)?;
        let b = random_bubble(&c, seed, 3).map_err(err)?;
        let ps = preferred_set(&c, &b, 1e-9, seed).map_err(err)?;
        let rep = check_influence_pattern(&c, &ps.entries, 1e-8).map_err(err)?;
        ensure!(rep.is_clean(), "instance {seed}: forbidden edges {:?}", rep.violations);
        edges += rep.graph.influence_edges().count();
    }
    Ok(format!("100 instances, {edges} permitted edges, none forbidden"))
}

fn mixed(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d).scale_real(1.0 / d as f64)
}

fn instruments() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = Rng::derived(seed, 1);
        let (d_in, d_out, outcomes) = (1 + rng.below(3), 1 + rng.below(3), 1 + rng.below(3));
        let kraus = if d_in > 1 { 1 + rng.below(2) } else { 1 };
        let kraus = kraus.max(d_in.div_ceil(outcomes * d_out));
        let inst = Instrument::random(d_in, d_out, outcomes, kraus, seed).map_err(err)?;
        let got = instrument_conditionals(&build_instrument_model(&inst, "").map_err(err)?).map_err(err)?;
        for g in 0..outcomes {
            worst = worst.max((got[g] - inst.apply(g, &mixed(d_in)).trace().re).abs());
        }
    }
    let mut worst_pair: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = Rng::derived(seed, 2);
        let (d0, d1, d2) = (1 + rng.below(2), 1 + rng.below(2), 1 + rng.below(2));
        let n1 = (1 + rng.below(2)).max(d0.div_ceil(d1));
        let n2 = (1 + rng.below(2)).max(d1.div_ceil(d2));
        let first = Instrument::random(d0, d1, n1, 1, 100 + seed).map_err(err)?;
        let second = Instrument::random(d1, d2, n2, 1, 200 + seed).map_err(err)?;
        let m1 = build_instrument_model(&first, "l").map_err(err)?;
        let m2 = build_instrument_model(&second, "r").map_err(err)?;
        let got = instrument_conditionals(&compose_instruments(&m1, &m2, Composition::Sequential).map_err(err)?)
            .map_err(err)?;
        for g1 in 0..n1 {
            let mid = first.apply(g1, &mixed(d0));
            for g2 in 0..n2 {
                worst_pair = worst_pair.max((got[g1 * n2 + g2] - second.apply(g2, &mid).trace().re).abs());
            }
        }
    }
    ensure!(worst <= 1e-8 && worst_pair <= 1e-8, "single {worst:e}, sequential {worst_pair:e}");
    Ok(format!("50 instruments {worst:.1e}, 20 sequential pairs {worst_pair:.1e}"))
}

/// Projection-postulate probability that box `k` is found occupied given
/// pre-selection `psi` and post-selection `phi`.
fn aav_oracle(psi: &[C64], phi: &[C64], k: usize) -> f64 {
    let amp = |keep: &dyn Fn(usize) -> bool| -> C64 {
        (0..psi.len()).filter(|&i| keep(i)).map(|i| phi[i].conj() * psi[i]).sum()
    };
    let found = amp(&|i| i == k).norm_sqr();
    let empty = amp(&|i| i != k).norm_sqr();
    found / (found + empty)
}

fn three_box() -> Check {
    let (c, trip) = three_box_triplets().map_err(err)?;
    let rep = three_box_check(&c, [&trip[0], &trip[1]], 1e-9).map_err(err)?;
    ensure!(rep.triplets_consistent == [true, true], "triplets not consistent");
    ensure!(rep.blocked, "paradox not blocked");
    let r = 1.0 / 3f64.sqrt();
    let psi = [c64(r, 0.0), c64(r, 0.0), c64(r, 0.0)];
    let phi = [c64(r, 0.0), c64(r, 0.0), c64(-r, 0.0)];
    let mut worst: f64 = 0.0;
    let mut found = Vec::new();
    for k in 0..3 {
        let p = operational_three_box(k).map_err(err)?.conditionals().map_err(err)?;
        let oracle = aav_oracle(&psi, &phi, k);
        worst = worst.max((p[1] - oracle).abs()).max((p[0] + p[1] - 1.0).abs());
        found.push(format!("{:.3}", p[1]));
    }
    ensure!(worst <= 1e-9, "operational deviation {worst:e}");
    Ok(format!("blocked (joint min {:.4}); p(found) per box [{}]", rep.joint_min, found.join(", ")))
}

/// `⟨Φ⁺| A_x ⊗ B_y |Φ⁺⟩` for `Z` readouts after `R_y(−θ)` on each wing.
fn chsh_direct(alice: [f64; 2], bob: [f64; 2]) -> f64 {
    let ry = |t: f64| {
        let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
        ComplexMatrix::from_real(2, &[c, -s, s, c])
    };
    let z = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]);
    let obs = |t: f64| ry(-t).adjoint().matmul(&z).matmul(&ry(-t));
    let phi = vec![c64(FRAC_1_SQRT_2, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(FRAC_1_SQRT_2, 0.0)];
    let e = |a: f64, b: f64| -> f64 {
        let o = kron(&obs(a), &obs(b)).unwrap();
        let v = o.mul_vec(&phi);
        phi.iter().zip(&v).map(|(x, y)| (x.conj() * y).re).sum()
    };
    e(alice[0], bob[0]) + e(alice[0], bob[1]) + e(alice[1], bob[0]) - e(alice[1], bob[1])
}

fn bell() -> Check {
    let inst = bell_instance(true).map_err(err)?;
    ensure!(inst.alice_angles == [0.0, FRAC_PI_2] && inst.bob_angles == [FRAC_PI_4, -FRAC_PI_4], "unexpected angles");
    let direct = chsh_direct(inst.alice_angles, inst.bob_angles);
    let r = classify_bell(&inst.spec, Some((0, None)), 1e-9).map_err(err)?;
    let chsh = r.chsh.ok_or("no CHSH value")?;
    ensure!((chsh - 2.0 * SQRT_2).abs() <= 1e-6 && (direct - 2.0 * SQRT_2).abs() <= 1e-6, "CHSH {chsh} / direct {direct}");
    ensure!(r.holds && r.cases.iter().all(|c| !c.lhv.feasible), "LHV model found");
    ensure!(r.fork_a && r.fork_b, "fork edges missing");
    ensure!(r.reduction == Some(ReductionOutcome::NoReductionFound), "reduction {:?}", r.reduction);
    let product = bell_instance(false).map_err(err)?.spec;
    let rp = classify_bell(&product, None, 1e-9).map_err(err)?;
    ensure!(!rp.holds && rp.cases.iter().all(|c| c.lhv.feasible), "product control not LHV feasible");
    let ReductionOutcome::Found(w) = search_reduction(&product, ReductionMode::Fork, 1e-9, 0).map_err(err)? else {
        return Err("no reduction witness for the product control".into());
    };
    let check = verify_reduction(&product, &w, ReductionMode::Fork, 1e-9).map_err(err)?;
    ensure!(check.valid, "witness fails: {:?}", check.failed);
    Ok(format!("CHSH {chsh:.9} (direct {direct:.9}), NO_REDUCTION_FOUND; product control LHV + verified witness"))
}

fn pbr() -> Check {
    let spec = pbr_instance().map_err(err)?;
    let r = classify_pbr(&spec, PbrEvents::default(), 1e-9).map_err(err)?;
    ensure!(r.exclusion, "exclusion fails (worst {:e})", r.exclusion_worst);
    ensure!(r.overlap && r.overlap_norm > 1e-3, "overlap norm {:e}", r.overlap_norm);
    ensure!(r.holds && r.collider_x && r.collider_y, "collider edges missing");
    let orth = PbrEvents { rho2: (0, 1), sigma2: (0, 1), ..PbrEvents::default() };
    let ro = classify_pbr(&spec, orth, 1e-9).map_err(err)?;
    ensure!(!ro.overlap && !ro.holds, "orthogonal control passes the overlap check");
    Ok(format!("exclusion worst {:.1e}, overlap {:.3e}; orthogonal control overlap {:.1e}", r.exclusion_worst, r.overlap_norm, ro.overlap_norm))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_qce")).args(args).env_remove("QCE_MAX_DIM").output().map_err(err)?;
        ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        Ok(out.stdout)
    };
    let file = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (pm, bell, pbr, wf, ps) = (file("pm.json"), file("bell.json"), file("pbr.json"), file("wf.json"), file("ps.json"));
    for (t, p) in [("prepare-measure", &pm), ("bell", &bell), ("pbr", &pbr), ("wigners-friend", &wf)] {
        run(&["scenario", "build", t, "--seed", "9", "--out", p])?;
    }
    run(&["preferred-set", "--circuit", &pm, "--bubble", &pm, "--out", &ps])?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", "--circuit", &pm],
        vec!["influences", "--circuit", &pm, "--decomps", &ps],
        vec!["preferred-set", "--circuit", &wf, "--bubble", &wf, "--bubble-name", "wigner", "--seed", "4"],
        vec!["histories", "--circuit", &pm, "--bubble", &pm],
        vec!["sample", "--circuit", &pm, "--bubble", &pm, "--n", "1000", "--seed", "7"],
        vec!["classify", "--spec", &bell, "--seed", "3"],
        vec!["classify", "--spec", &pbr],
        vec!["scenario", "build", "local-friendliness"],
    ];
    for args in &commands {
        ensure!(run(args)? == run(args)?, "{args:?} differs between runs");
    }
    Ok(format!("{} commands byte-identical across runs", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("influence equivalence", thm1_equivalence),
        ("shift preference", shift_preference),
        ("prepare-measure statistics", prepare_measure),
        ("extended-model parities", extended_parity),
        ("Wigner's friend preferred sets", wigners_friend),
        ("history property suite", history_suite),
        ("influence pattern suite", pattern_suite),
        ("instrument reproduction", instruments),
        ("three-box", three_box),
        ("Bell pipeline", bell),
        ("PBR pipeline", pbr),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
