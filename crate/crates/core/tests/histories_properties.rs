//! History probabilities on random circuits and bubbles: the linear and
//! sandwich forms agree, preferred histories are consistent and normalised,
//! and the influence pattern of a preferred set has only the permitted
//! edges.

use qce_core::circuit::cut_bubble;
use qce_core::fixtures::{random_bubble, random_circuit};
use qce_core::histories::{consistency_check, history_distribution, history_tables, sample_histories};
use qce_core::influence::PlacedDecomp;
use qce_core::preference::{check_influence_pattern, preferred_set};

#[test]
fn resplicing_a_cut_restores_the_circuit() {
    for seed in 0..50u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed, 3).unwrap();
        let ch = cut_bubble(&c, &b).unwrap();
        // Halves of boundary wires stay open; name them by their wire.
        let strip = |ls: &[String]| -> Vec<String> {
            ls.iter().map(|l| l.trim_end_matches(":in").trim_end_matches(":out").to_string()).collect()
        };
        let direct =
            c.unitary_between(&strip(&ch.input_labels[ch.cut..]), &strip(&ch.output_labels[ch.cut..])).unwrap();
        assert!(ch.resplice().max_diff(&direct) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn preferred_histories_are_consistent_and_normalised() {
    for seed in 0..100u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed, 3).unwrap();
        let ps = preferred_set(&c, &b, 1e-9, seed).unwrap();
        let (dist, sandwich) = history_tables(&c, &ps.entries).unwrap();
        for (p, q) in dist.probs.iter().zip(&sandwich) {
            assert!((p - q).abs() <= 1e-9, "seed {seed}: linear {p} vs sandwich {q}");
        }
        assert!((dist.total() - 1.0).abs() <= 1e-8, "seed {seed}: total {}", dist.total());
        assert!(dist.min_probability() >= -1e-9, "seed {seed}");
        let rep = consistency_check(&c, &ps.entries, 1e-8).unwrap();
        assert!(rep.consistent, "seed {seed}: off-diagonal {}", rep.max_off_diagonal);
    }
}

#[test]
fn preferred_sets_have_only_permitted_influences() {
    for seed in 0..100u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed, 3).unwrap();
        let ps = preferred_set(&c, &b, 1e-9, seed).unwrap();
        let rep = check_influence_pattern(&c, &ps.entries, 1e-8).unwrap();
        assert!(rep.is_clean(), "seed {seed}: {:?}", rep.violations);
    }
}

#[test]
fn marginals_match_smaller_histories() {
    for seed in 0..30u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed, 3).unwrap();
        let ps = preferred_set(&c, &b, 1e-9, 0).unwrap();
        let full = history_distribution(&c, &ps.entries).unwrap();
        if full.sizes.len() < 2 {
            continue;
        }
        // Drop the last decomposition in temporal order.
        let keep: Vec<usize> = (0..full.sizes.len() - 1).collect();
        let marg = full.marginal(&keep).unwrap();
        let sub: Vec<PlacedDecomp> = keep.iter().map(|&k| full.placed[k].clone()).collect();
        let direct = history_distribution(&c, &sub).unwrap();
        assert_eq!(marg.sizes, direct.sizes);
        for (p, q) in marg.probs.iter().zip(&direct.probs) {
            assert!((p - q).abs() <= 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn listing_order_does_not_change_probabilities() {
    for seed in 0..30u64 {
        let c = random_circuit(seed, 5, 3).unwrap();
        let b = random_bubble(&c, seed, 3).unwrap();
        let ps = preferred_set(&c, &b, 1e-9, 0).unwrap();
        let mut reversed = ps.entries.clone();
        reversed.reverse();
        let d1 = history_distribution(&c, &ps.entries).unwrap();
        let d2 = history_distribution(&c, &reversed).unwrap();
        assert_eq!(d1.sizes, d2.sizes);
        for (p, q) in d1.probs.iter().zip(&d2.probs) {
            assert!((p - q).abs() <= 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn sampling_is_deterministic_and_tracks_probabilities() {
    let c = random_circuit(3, 5, 3).unwrap();
    let b = random_bubble(&c, 3, 3).unwrap();
    let ps = preferred_set(&c, &b, 1e-9, 0).unwrap();
    let dist = history_distribution(&c, &ps.entries).unwrap();
    let a = sample_histories(&dist, 99, 4000);
    let b2 = sample_histories(&dist, 99, 4000);
    assert_eq!(a, b2);
    let mut counts = vec![0usize; dist.len()];
    for (_, h) in &a {
        counts[dist.index(h).unwrap()] += 1;
    }
    for (k, &n) in counts.iter().enumerate() {
        let p = dist.probs[k].max(0.0);
        let sd = (p * (1.0 - p) / 4000.0).sqrt();
        assert!((n as f64 / 4000.0 - p).abs() <= 5.0 * sd + 1e-3, "history {k}");
    }
}
