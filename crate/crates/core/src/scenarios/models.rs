//! Builders for worked models and canonical scenario instances.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use super::{ScenarioKind, ScenarioSpec};
use crate::algebra::ProjDecomp;
use crate::circuit::{Bubble, Circuit, CircuitBuilder, Placement, Side};
use crate::influence::PlacedDecomp;
use crate::linalg::{c64, kron, ComplexMatrix, C64};
use crate::{Error, Result};

/// Controlled shift `|i⟩|j⟩ ↦ |i⟩|j + i mod d⟩` on `d²` dimensions.
pub fn shift_unitary(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + (j + i) % d, i * d + j)] = c64(1.0, 0.0);
        }
    }
    m
}

/// Unitary discrete Fourier transform; column 0 is the uniform vector.
pub fn fourier_matrix(d: usize) -> ComplexMatrix {
    let s = 1.0 / libm::sqrt(d as f64);
    ComplexMatrix::from_fn(d, d, |r, k| {
        let t = 2.0 * core::f64::consts::PI * (r * k) as f64 / d as f64;
        c64(s * libm::cos(t), s * libm::sin(t))
    })
}

/// A unitary whose first column is the unit vector `v`, completed by
/// Gram-Schmidt against the standard basis.
pub fn unitary_with_first_column(v: &[C64]) -> Result<ComplexMatrix> {
    let d = v.len();
    let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
    if d == 0 || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("first column must be a unit vector".into()));
    }
    let mut cols: Vec<Vec<C64>> = vec![v.to_vec()];
    for k in 0..d {
        if cols.len() == d {
            break;
        }
        let mut e = vec![c64(0.0, 0.0); d];
        e[k] = c64(1.0, 0.0);
        for _ in 0..2 {
            for q in &cols {
                let ip: C64 = q.iter().zip(&e).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in e.iter_mut().zip(q) {
                    *x -= ip * y;
                }
            }
        }
        let n = libm::sqrt(e.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if n > 1e-6 {
            cols.push(e.iter().map(|z| z / n).collect());
        }
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (k, col) in cols.iter().enumerate() {
        u.set_col(k, col);
    }
    Ok(u)
}

pub(crate) fn cnot() -> ComplexMatrix {
    shift_unitary(2)
}

pub(crate) fn hadamard() -> ComplexMatrix {
    ComplexMatrix::from_real(2, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2])
}

/// `exp(-iθY/2)`.
pub(crate) fn ry(theta: f64) -> ComplexMatrix {
    let (s, c) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
    ComplexMatrix::from_real(2, &[c, -s, s, c])
}

/// `Σ_k |k⟩⟨k| ⊗ ops[k]` with the control first.
pub(crate) fn controlled(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let n = ops.len();
    let mut out = ComplexMatrix::zeros(0, 0);
    for (k, u) in ops.iter().enumerate() {
        let term = kron(&ComplexMatrix::basis_projector(n, k), u).expect("small");
        out = if k == 0 { term } else { &out + &term };
    }
    out
}

/// Unitary whose column `k` is `vectors[k]`.
pub(crate) fn from_columns(vectors: &[Vec<C64>]) -> ComplexMatrix {
    let d = vectors.len();
    let mut m = ComplexMatrix::zeros(d, d);
    for (k, v) in vectors.iter().enumerate() {
        m.set_col(k, v);
    }
    m
}

fn real(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| c64(x, 0.0)).collect()
}

fn placed(d: ProjDecomp, wire: &str, side: Side) -> PlacedDecomp {
    PlacedDecomp::new(d, Placement::new(wire, side))
}

fn at_in(d: ProjDecomp, wire: &str) -> PlacedDecomp {
    placed(d, wire, Side::In)
}

fn at_out(d: ProjDecomp, wire: &str) -> PlacedDecomp {
    placed(d, wire, Side::Out)
}

/// Prepare-measure model: a system qubit copied into a preparation device,
/// evolved by `U`, then copied into a measurement device. The extended
/// circuit adds a recording interaction on each side of each device.
#[derive(Clone, Debug)]
pub struct PrepareMeasure {
    pub basic: Circuit,
    pub basic_bubble: Bubble,
    pub extended: Circuit,
    /// The four-wire bubble inside the extended circuit.
    pub bubble1: Bubble,
    /// The ten-wire bubble of the extended circuit.
    pub bubble2: Bubble,
}

impl PrepareMeasure {
    /// Placements of the labelled events.
    pub fn z1() -> Placement {
        Placement::input("s1")
    }
    pub fn z2() -> Placement {
        Placement::output("s2")
    }
    pub fn x1() -> Placement {
        Placement::output("p0")
    }
    pub fn x2() -> Placement {
        Placement::input("q1")
    }
    pub fn z3() -> Placement {
        Placement::input("p0")
    }
    pub fn z4() -> Placement {
        Placement::output("p1")
    }
    pub fn z5() -> Placement {
        Placement::input("q0")
    }
    pub fn z6() -> Placement {
        Placement::output("q1")
    }
}

pub fn build_prepare_measure(u: &ComplexMatrix) -> Result<PrepareMeasure> {
    if u.rows() != 2 || u.cols() != 2 || !u.is_unitary(1e-9) {
        return Err(Error::InvalidArgument("prepare-measure needs a 2x2 unitary".into()));
    }
    let core = |b: CircuitBuilder| {
        b.wires(&["s0", "p0", "s1", "p1", "s2", "q0", "s3", "q1"], 2)
            .gate("C1", &["s0", "p0"], &["s1", "p1"], cnot())
            .gate("U", &["s1"], &["s2"], u.clone())
            .gate("C2", &["s2", "q0"], &["s3", "q1"], cnot())
    };
    let basic = core(CircuitBuilder::new()).build()?;
    let extended = core(CircuitBuilder::new())
        .wires(&["pr", "e0", "e1", "f0", "p2", "f1", "qr", "g0", "g1", "h0", "q2", "h1"], 2)
        .gate("E", &["pr", "e0"], &["p0", "e1"], cnot())
        .gate("F", &["p1", "f0"], &["p2", "f1"], cnot())
        .gate("G", &["qr", "g0"], &["q0", "g1"], cnot())
        .gate("H", &["q1", "h0"], &["q2", "h1"], cnot())
        .build()?;
    let four = ["p0", "s1", "s2", "q1"];
    Ok(PrepareMeasure {
        basic_bubble: Bubble::new(&basic, &four)?,
        bubble1: Bubble::new(&extended, &four)?,
        bubble2: Bubble::new(&extended, &["e0", "p0", "s1", "p1", "f1", "g0", "q0", "s2", "q1", "h1"])?,
        basic,
        extended,
    })
}

/// Wigner's friend model: preparation, Hadamard, the friend's CNOT
/// measurement into memory `m1`, then Wigner's Bell-basis measurement of
/// system and memory recorded in `w1`.
#[derive(Clone, Debug)]
pub struct WignersFriend {
    pub circuit: Circuit,
    /// Preparation and the friend's measurement.
    pub bubble1: Bubble,
    /// Additionally Wigner's measurement.
    pub bubble2: Bubble,
}

impl WignersFriend {
    /// The friend's outcome: outgoing decomposition of the measured system.
    pub fn friend_outcome() -> Placement {
        Placement::output("s2")
    }
    pub fn wigner_outcome() -> Placement {
        Placement::output("s5")
    }
}

pub fn build_wigners_friend() -> Result<WignersFriend> {
    let circuit = wigner_circuit(hadamard())?;
    Ok(WignersFriend {
        bubble1: Bubble::new(&circuit, &["p0", "s1", "s2", "m1"])?,
        bubble2: Bubble::new(&circuit, &["p0", "s1", "s2", "m1", "s5", "w1"])?,
        circuit,
    })
}

fn wigner_circuit(second: ComplexMatrix) -> Result<Circuit> {
    CircuitBuilder::new()
        .wires(&["s0", "p0", "s1", "p1", "s2", "m0", "s3", "m1", "s4", "m2", "s5", "w0", "s6", "w1"], 2)
        .gate("G1", &["s0", "p0"], &["s1", "p1"], cnot())
        .gate("H1", &["s1"], &["s2"], hadamard())
        .gate("G3", &["s2", "m0"], &["s3", "m1"], cnot())
        .gate("G4", &["s3", "m1"], &["s4", "m2"], cnot())
        .gate("H2", &["s4"], &["s5"], second)
        .gate("G6", &["s5", "w0"], &["s6", "w1"], cnot())
        .build()
}

impl WignersFriend {
    /// Scenario roles on the model: preparation `Z` on `s1`, the friend's
    /// record `A1` on `m1`, Wigner's record `A2` on `w1`. With
    /// `conjugate = false` Wigner measures in the friend's basis instead.
    pub fn spec(&self, conjugate: bool) -> Result<ScenarioSpec> {
        let circuit = if conjugate { self.circuit.clone() } else { wigner_circuit(ComplexMatrix::identity(2))? };
        let comp = || ProjDecomp::computational(2);
        Ok(ScenarioSpec::new(ScenarioKind::Wigner, circuit)
            .with_role("Z", at_in(comp(), "s1"))
            .with_role("X1", at_in(comp(), "m0"))
            .with_role("A1", at_out(comp(), "m1"))
            .with_role("X2", at_in(comp(), "w0"))
            .with_role("A2", at_out(comp(), "w1"))
            .with_system("S1", &["s2"])
            .with_system("S2", &["s3", "m1"]))
    }
}

/// CNOT preparation of `|i⟩` on `s` followed by an X-basis CNOT readout.
pub fn complementarity_instance() -> Result<ScenarioSpec> {
    let v = cnot().matmul(&kron(&hadamard(), &ComplexMatrix::identity(2))?);
    let circuit = CircuitBuilder::new()
        .wires(&["z", "g", "s", "w", "x", "f", "a"], 2)
        .gate("U", &["z", "g"], &["s", "w"], cnot())
        .gate("V", &["s", "x"], &["f", "a"], v)
        .build()?;
    let comp = || ProjDecomp::computational(2);
    Ok(ScenarioSpec::new(ScenarioKind::Complementarity, circuit)
        .with_role("Z", at_in(comp(), "z"))
        .with_role("W", at_out(comp(), "w"))
        .with_role("X", at_in(comp(), "x"))
        .with_role("A", at_out(comp(), "a"))
        .with_system("S", &["s"]))
}

/// Bell-scenario instance: a four-dimensional source `z` mapped to two
/// qubits, with binary settings rotating each wing before a Z readout.
#[derive(Clone, Debug)]
pub struct BellInstance {
    pub spec: ScenarioSpec,
    pub alice_angles: [f64; 2],
    pub bob_angles: [f64; 2],
}

fn bell_states() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    from_columns(&[
        real(&[s, 0.0, 0.0, s]),
        real(&[s, 0.0, 0.0, -s]),
        real(&[0.0, s, s, 0.0]),
        real(&[0.0, s, -s, 0.0]),
    ])
}

fn wing(angles: [f64; 2]) -> ComplexMatrix {
    controlled(&[ry(-angles[0]), ry(-angles[1])])
}

/// `entangled = true` gives the CHSH-optimal instance; `false` the product
/// preparation `|k⟩ ↦ |k₁⟩|k₂⟩` with the same settings.
pub fn bell_instance(entangled: bool) -> Result<BellInstance> {
    let source = if entangled { bell_states() } else { ComplexMatrix::identity(4) };
    let alice = [0.0, FRAC_PI_2];
    let bob = [FRAC_PI_4, -FRAC_PI_4];
    let circuit = CircuitBuilder::new()
        .wire("z", 4)
        .wires(&["sa", "sb", "x", "y", "xa", "a", "yb", "b"], 2)
        .gate("U", &["z"], &["sa", "sb"], source)
        .gate("VA", &["x", "sa"], &["xa", "a"], wing(alice))
        .gate("VB", &["y", "sb"], &["yb", "b"], wing(bob))
        .build()?;
    let comp = ProjDecomp::computational;
    let spec = ScenarioSpec::new(ScenarioKind::Bell, circuit)
        .with_role("Z", at_in(comp(4), "z"))
        .with_role("X", at_in(comp(2), "x"))
        .with_role("A", at_out(comp(2), "a"))
        .with_role("Y", at_in(comp(2), "y"))
        .with_role("B", at_out(comp(2), "b"))
        .with_constraint("x", "b")
        .with_constraint("y", "a");
    Ok(BellInstance { spec, alice_angles: alice, bob_angles: bob })
}

/// The four entangled vectors of the two-qubit PBR measurement, each
/// orthogonal to one of `|00⟩, |0+⟩, |+0⟩, |++⟩`.
pub fn pbr_basis() -> [Vec<C64>; 4] {
    let s = FRAC_1_SQRT_2;
    let zero = [1.0, 0.0];
    let one = [0.0, 1.0];
    let plus = [s, s];
    let minus = [s, -s];
    let pair = |a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]| -> Vec<C64> {
        let mut v = vec![c64(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                v[2 * i + j] = c64(s * (a[i] * b[j] + c[i] * d[j]), 0.0);
            }
        }
        v
    };
    [pair(zero, one, one, zero), pair(zero, minus, one, plus), pair(plus, one, minus, zero), pair(plus, minus, minus, plus)]
}

/// PBR instance: each wing prepares `|0⟩, |1⟩, |−⟩` or `|+⟩` on its system
/// qubit, recorded by outcome `a` with setting `x`; the joint system is then
/// measured in [`pbr_basis`] into the four-dimensional wire `w`.
pub fn pbr_instance() -> Result<ScenarioSpec> {
    let s = FRAC_1_SQRT_2;
    // Column (x, f) ↦ |a⟩|state⟩.
    let prep = from_columns(&[
        real(&[1.0, 0.0, 0.0, 0.0]),
        real(&[0.0, 0.0, s, -s]),
        real(&[0.0, 1.0, 0.0, 0.0]),
        real(&[0.0, 0.0, s, s]),
    ]);
    let basis = pbr_basis();
    let measure = from_columns(&basis).adjoint();
    let circuit = CircuitBuilder::new()
        .wires(&["x", "fa", "y", "fb", "z", "a", "sa", "b", "sb", "g"], 2)
        .wire("w", 4)
        .gate("VA", &["x", "fa"], &["a", "sa"], prep.clone())
        .gate("VB", &["y", "fb"], &["b", "sb"], prep)
        .gate("U", &["z", "sa", "sb"], &["g", "w"], kron(&ComplexMatrix::identity(2), &measure)?)
        .build()?;
    let comp = ProjDecomp::computational;
    Ok(ScenarioSpec::new(ScenarioKind::Pbr, circuit)
        .with_role("Z", at_in(comp(2), "z"))
        .with_role("W", at_out(comp(4), "w"))
        .with_role("X", at_in(comp(2), "x"))
        .with_role("A", at_out(comp(2), "a"))
        .with_role("Y", at_in(comp(2), "y"))
        .with_role("B", at_out(comp(2), "b"))
        .with_system("S", &["sa", "sb"])
        .with_constraint("x", "b")
        .with_constraint("y", "a"))
}

/// Local-friendliness instance on a partially entangled source: the friend
/// measures Alice's qubit in the X basis into memory `m1`; Alice undoes the
/// friend's interaction and measures at her setting's angle; Bob measures
/// directly.
///
/// * `friend = false` keeps the circuit but makes the friend's decomposition
///   trivial;
/// * `entangled = false` replaces the source with a product preparation.
pub fn local_friendliness_instance(friend: bool, entangled: bool) -> Result<ScenarioSpec> {
    let alpha = core::f64::consts::PI / 6.0;
    let (c, s) = (libm::cos(alpha), libm::sin(alpha));
    let source = if entangled {
        from_columns(&[real(&[c, 0.0, 0.0, s]), real(&[-s, 0.0, 0.0, c]), real(&[0.0, 1.0, 0.0, 0.0]), real(&[0.0, 0.0, 1.0, 0.0])])
    } else {
        ComplexMatrix::identity(4)
    };
    let h1 = kron(&hadamard(), &ComplexMatrix::identity(2))?;
    let x_copy = h1.matmul(&cnot()).matmul(&h1);
    let alice = [0.0, FRAC_PI_2];
    let t = libm::atan(libm::sin(2.0 * alpha));
    let bob = [t, -t];
    // Alice: undo the friend's copy, then rotate by her setting.
    let undo = kron(&ComplexMatrix::identity(2), &x_copy)?;
    let rotate = controlled(&[
        kron(&ry(-alice[0]), &ComplexMatrix::identity(2))?,
        kron(&ry(-alice[1]), &ComplexMatrix::identity(2))?,
    ]);
    let circuit = CircuitBuilder::new()
        .wire("z", 4)
        .wires(&["sa", "sb", "m0", "sa1", "m1", "x2", "xa", "a2", "m2", "y2", "yb", "b2"], 2)
        .gate("U", &["z"], &["sa", "sb"], source)
        .gate("F", &["sa", "m0"], &["sa1", "m1"], x_copy)
        .gate("VA", &["x2", "sa1", "m1"], &["xa", "a2", "m2"], rotate.matmul(&undo))
        .gate("VB", &["y2", "sb"], &["yb", "b2"], wing(bob))
        .build()?;
    let comp = ProjDecomp::computational;
    let triv = || ProjDecomp::trivial(2);
    Ok(ScenarioSpec::new(ScenarioKind::LocalFriendliness, circuit)
        .with_role("Z", at_in(comp(4), "z"))
        .with_role("X1", at_in(comp(2), "m0"))
        .with_role("A1", at_out(if friend { comp(2) } else { triv() }, "m1"))
        .with_role("X2", at_in(comp(2), "x2"))
        .with_role("A2", at_out(comp(2), "a2"))
        .with_role("Y1", at_in(triv(), "y2"))
        .with_role("B1", at_in(triv(), "sb"))
        .with_role("Y2", at_in(comp(2), "y2"))
        .with_role("B2", at_out(comp(2), "b2"))
        .with_system("SA1", &["sa"])
        .with_system("SA2", &["sa1", "m1"])
        .with_system("SB1", &["sb"])
        .with_system("SB2", &["sb"])
        .with_constraint("x2", "b2")
        .with_constraint("y2", "a2"))
}

/// Operational three-box model with the middle check on box `choice`.
///
/// A qutrit is read into a preparation device in the Fourier basis (whose
/// first element is the uniform superposition), checked by a controlled
/// flip of a memory qubit prepared in `|0⟩`, and finally read in a basis
/// whose first element is `(|0⟩ + |1⟩ − |2⟩)/√3`.
#[derive(Clone, Debug)]
pub struct OperationalThreeBox {
    pub circuit: Circuit,
    pub bubble: Bubble,
    pub preparation: Placement,
    pub memory_preparation: Placement,
    pub middle: Placement,
    pub post_selection: Placement,
    pub psi: Vec<C64>,
    pub phi: Vec<C64>,
    pub choice: usize,
}

pub fn operational_three_box(choice: usize) -> Result<OperationalThreeBox> {
    if choice > 2 {
        return Err(Error::InvalidArgument(format!("box {choice} does not exist")));
    }
    let r = 1.0 / libm::sqrt(3.0);
    let psi = real(&[r, r, r]);
    let phi = real(&[r, r, -r]);
    let id3 = ComplexMatrix::identity(3);
    let v = shift_unitary(3);
    let prep = kron(&fourier_matrix(3), &id3)?.matmul(&v.adjoint());
    let post = v.matmul(&kron(&unitary_with_first_column(&phi)?.adjoint(), &id3)?);
    let p = ComplexMatrix::basis_projector(3, choice);
    let not_p = &id3 - &p;
    let x = ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]);
    let check = &kron(&p, &x)? + &kron(&not_p, &ComplexMatrix::identity(2))?;
    let circuit = CircuitBuilder::new()
        .wires(&["s0", "p0", "s1", "p1", "s2", "q0", "s3", "q1"], 3)
        .wires(&["mr", "k0", "m0", "k1", "m1", "r0", "m2", "r1"], 2)
        .gate("P", &["s0", "p0"], &["s1", "p1"], prep)
        .gate("K", &["mr", "k0"], &["m0", "k1"], cnot())
        .gate("M", &["s1", "m0"], &["s2", "m1"], check)
        .gate("R", &["m1", "r0"], &["m2", "r1"], cnot())
        .gate("Q", &["s2", "q0"], &["s3", "q1"], post)
        .build()?;
    let bubble = Bubble::new(&circuit, &["p0", "s1", "k0", "m0", "m1", "r1", "s2", "q1"])?;
    Ok(OperationalThreeBox {
        circuit,
        bubble,
        preparation: Placement::input("s1"),
        memory_preparation: Placement::input("m0"),
        middle: Placement::output("m1"),
        post_selection: Placement::output("s2"),
        psi,
        phi,
        choice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_random_unitary;

    #[test]
    fn shift_unitary_examples() {
        assert_eq!(shift_unitary(2), cnot());
        assert_eq!(cnot()[(3, 2)], c64(1.0, 0.0));
        for d in 2..5 {
            assert!(shift_unitary(d).unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn completion_is_unitary() {
        let u = haar_random_unitary(4, 3);
        let w = unitary_with_first_column(&u.col(2)).unwrap();
        assert!(w.unitarity_deviation() < 1e-12);
        assert!((0..4).all(|r| (w[(r, 0)] - u[(r, 2)]).norm() < 1e-12));
        assert!(fourier_matrix(3).unitarity_deviation() < 1e-12);
    }

    #[test]
    fn pbr_basis_is_orthonormal_and_excludes_products() {
        let b = pbr_basis();
        let m = from_columns(&b);
        assert!(m.unitarity_deviation() < 1e-12);
        let s = FRAC_1_SQRT_2;
        let zero = [1.0, 0.0];
        let plus = [s, s];
        let prods = [[zero, zero], [zero, plus], [plus, zero], [plus, plus]];
        for (k, [u, v]) in prods.iter().enumerate() {
            let ip: f64 = (0..4).map(|i| b[k][i].re * u[i / 2] * v[i % 2]).sum();
            assert!(ip.abs() < 1e-12);
        }
    }

    #[test]
    fn builders_produce_valid_circuits() {
        let pm = build_prepare_measure(&haar_random_unitary(2, 1)).unwrap();
        assert_eq!(pm.bubble2.len(), 10);
        assert!(build_prepare_measure(&ComplexMatrix::identity(3)).is_err());
        build_wigners_friend().unwrap();
        complementarity_instance().unwrap().validate().unwrap();
        bell_instance(true).unwrap().spec.validate().unwrap();
        pbr_instance().unwrap().validate().unwrap();
        local_friendliness_instance(true, true).unwrap().validate().unwrap();
        operational_three_box(1).unwrap();
    }
}
