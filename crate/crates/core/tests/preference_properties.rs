//! Preferred decompositions: the light-cone route against the literal
//! full-space channel, temporal determination, uniqueness, and the
//! no-influence condition.

use qce_core::circuit::{cut_bubble, lower_half, upper_half, Side};
use qce_core::fixtures::{random_bubble, random_circuit, random_influence_instance};
use qce_core::influence::{ChannelSplit, OutputFactor};
use qce_core::preference::{preferred_decomposition, preferred_on_wire, preferred_set};
use qce_core::scenarios::shift_unitary;
use qce_core::{algebra::ProjDecomp, ComplexMatrix};

/// Permutation unitary sending `|i_0 … i_k⟩` (factors `dims`) to the
/// basis state whose factor `j` is `i_{order[j]}`.
fn perm_matrix(dims: &[usize], order: &[usize]) -> ComplexMatrix {
    let n: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let mut m = ComplexMatrix::zeros(n, n);
    for idx in 0..n {
        let mut digits = vec![0; dims.len()];
        let mut rem = idx;
        for k in (0..dims.len()).rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let mut out = 0;
        for (j, &k) in order.iter().enumerate() {
            out = out * new_dims[j] + digits[k];
        }
        m[(out, idx)] = qce_core::c64(1.0, 0.0);
    }
    m
}

/// The preferred decomposition at one side of `wire`, computed on the whole
/// cut circuit with every opposite half of the bubble as the preferring
/// output.
fn literal_route(c: &qce_core::circuit::Circuit, b: &qce_core::circuit::Bubble, wire: &str, side: Side) -> ProjDecomp {
    let ch = cut_bubble(c, b).unwrap();
    // Orient so that the decomposed half is an input.
    let (u, ins, in_dims, outs, out_dims, start, targets): (ComplexMatrix, _, _, _, _, String, Vec<String>) = match side {
        Side::Out => (
            ch.unitary.clone(),
            ch.input_labels.clone(),
            ch.input_dims.clone(),
            ch.output_labels.clone(),
            ch.output_dims.clone(),
            upper_half(wire),
            b.wires().iter().map(|w| lower_half(w)).collect(),
        ),
        Side::In => (
            ch.unitary.adjoint(),
            ch.output_labels.clone(),
            ch.output_dims.clone(),
            ch.input_labels.clone(),
            ch.input_dims.clone(),
            lower_half(wire),
            b.wires().iter().map(|w| upper_half(w)).collect(),
        ),
    };
    let a_pos = ins.iter().position(|l| *l == start).unwrap();
    let mut in_order = vec![a_pos];
    in_order.extend((0..ins.len()).filter(|&k| k != a_pos));
    let d_pos: Vec<usize> = (0..outs.len()).filter(|&k| targets.contains(&outs[k])).collect();
    let mut out_order: Vec<usize> = (0..outs.len()).filter(|k| !d_pos.contains(k)).collect();
    out_order.extend(&d_pos);
    let u = perm_matrix(&out_dims, &out_order).matmul(&u).matmul(&perm_matrix(&in_dims, &in_order).adjoint());
    let a = in_dims[a_pos];
    let d: usize = d_pos.iter().map(|&k| out_dims[k]).product();
    let n = u.rows();
    let split = ChannelSplit::new(u, (a, n / a), (n / d, d), 1e-9).unwrap();
    preferred_decomposition(&split, 1e-9, 0).unwrap()
}

#[test]
fn light_cone_route_matches_full_space() {
    for seed in 0..30u64 {
        let c = random_circuit(seed, 4, 2).unwrap();
        let b = random_bubble(&c, seed, 2).unwrap();
        for w in b.wires() {
            for side in [Side::In, Side::Out] {
                let fast = preferred_on_wire(&c, &b, w, side, None, 1e-9, 0).unwrap();
                let slow = literal_route(&c, &b, w, side);
                assert!(fast.distance(&slow) <= 1e-8, "seed {seed}, wire {w} {side:?}");
            }
        }
    }
}

#[test]
fn future_wires_determine_out_decompositions() {
    for seed in 0..40u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed ^ 0x55, 3).unwrap();
        let top = c.topology().unwrap();
        let rank = |w: &str| top.wire_rank[top.wire_index[w]];
        for w in b.wires() {
            let all = preferred_on_wire(&c, &b, w, Side::Out, None, 1e-9, 0).unwrap();
            let future: Vec<String> = b.wires().iter().filter(|v| rank(v) > rank(w)).cloned().collect();
            let only = preferred_on_wire(&c, &b, w, Side::Out, Some(&future), 1e-9, 0).unwrap();
            assert!(all.distance(&only) <= 1e-8, "seed {seed}, wire {w}");
        }
    }
}

#[test]
fn preferred_sets_do_not_depend_on_the_seed() {
    for seed in 0..20u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed, 3).unwrap();
        let p = preferred_set(&c, &b, 1e-9, 0).unwrap();
        let q = preferred_set(&c, &b, 1e-9, 17 + seed).unwrap();
        assert!(p.distance(&q) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn preferred_projectors_commute_with_the_preferring_output() {
    for seed in 0..60u64 {
        let inst = random_influence_instance(seed).unwrap();
        let ch = &inst.channel;
        let pref = preferred_decomposition(ch, 1e-9, 0).unwrap();
        assert!(pref.validate(1e-9).is_ok());
        for r in 0..ch.d {
            for col in 0..ch.d {
                let h = ch.output_operator(&ComplexMatrix::unit(ch.d, r, col), OutputFactor::D).unwrap();
                for p in pref.projectors() {
                    let pa = qce_core::linalg::kron(p, &ComplexMatrix::identity(ch.b)).unwrap();
                    assert!(pa.commutator(&h).max_abs() < 1e-8, "seed {seed}");
                }
            }
        }
    }
}

#[test]
fn controlled_shifts_prefer_the_computational_basis() {
    for d in 2..=4 {
        let ch = ChannelSplit::new(shift_unitary(d), (d, d), (d, d), 1e-12).unwrap();
        let p = preferred_decomposition(&ch, 1e-9, 0).unwrap();
        assert!(p.distance(&ProjDecomp::computational(d)) <= 1e-10, "d = {d}");
    }
}
