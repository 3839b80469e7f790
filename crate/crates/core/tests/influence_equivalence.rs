//! The commutator test for interference influence agrees with the
//! operational phase-signalling detector.

use qce_core::fixtures::{random_influence_instance, InstanceKind};
use qce_core::influence::{interference_influence, phase_signal_oracle, standard_phase_grid};

#[test]
fn commutator_test_matches_phase_oracle() {
    let mut counts = [0usize; 2];
    for seed in 0..200u64 {
        let inst = random_influence_instance(seed).unwrap();
        let algebraic = interference_influence(&inst.channel, &inst.pa, &inst.pd, 1e-8).unwrap().present;
        let grid = standard_phase_grid(inst.pa.len(), 6, seed);
        let operational = phase_signal_oracle(&inst.channel, &inst.pa, &inst.pd, &grid, 1e-8).unwrap();
        assert_eq!(algebraic, operational, "seed {seed} ({:?})", inst.kind);
        if inst.kind != InstanceKind::Haar {
            assert!(!algebraic, "seed {seed}: {:?} instance should carry no influence", inst.kind);
        }
        counts[algebraic as usize] += 1;
    }
    assert!(counts[0] > 0 && counts[1] > 0, "{counts:?}");
}
