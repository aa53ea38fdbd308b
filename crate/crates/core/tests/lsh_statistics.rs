mod common;

use common::{pair_at_angle, shared_tokens_oracle};
use looksearch::lsh::{binarize, hamming_distance, make_hasher, BinaryCode};
use looksearch::synth::rng;
use looksearch::Embedding;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Mean shared-token fraction over `trials` fresh hashers and fresh pairs.
fn measured_collision_rate(theta: f64, bands: usize, bits: usize, trials: u64, dim: usize) -> f64 {
    let mut rng = rng(0xC0FFEE ^ (theta.to_bits()));
    let mut total = 0.0;
    for trial in 0..trials {
        let hasher = make_hasher(dim, bands, bits, trial).unwrap();
        let (a, b) = pair_at_angle(&mut rng, dim, theta);
        let ta = hasher.tokens(&Embedding::new(a.clone())).unwrap();
        let tb = hasher.tokens(&Embedding::new(b.clone())).unwrap();
        let shared = ta.iter().zip(&tb).filter(|(x, y)| x == y).count();
        assert_eq!(shared as u32, shared_tokens_oracle(&hasher, &a, &b));
        total += shared as f64 / bands as f64;
    }
    total / trials as f64
}

#[test]
fn shared_fraction_matches_collision_probability() {
    let theta = 0.2;
    let expected = (1.0 - theta / PI).powi(4);
    assert!((expected - 0.77).abs() < 0.005);
    let measured = measured_collision_rate(theta, 32, 4, 1000, 16);
    assert!((measured - expected).abs() <= 0.05, "measured {measured}, expected {expected}");
}

#[test]
fn shared_count_non_increasing_in_angle() {
    let mut prev = f64::INFINITY;
    for bin in 0..10 {
        let theta = (bin as f64 + 0.5) * PI / 10.0;
        let m = measured_collision_rate(theta, 32, 4, 300, 12);
        assert!(m <= prev + 1e-12, "bin {bin}: {m} > {prev}");
        prev = m;
    }
}

#[test]
fn antipodal_vectors_share_nothing() {
    let hasher = make_hasher(8, 32, 4, 1).unwrap();
    let mut r = rng(5);
    for _ in 0..50 {
        let (a, _) = pair_at_angle(&mut r, 8, 0.1);
        let neg: Vec<f32> = a.iter().map(|x| -x).collect();
        assert_eq!(shared_tokens_oracle(&hasher, &a, &neg), 0);
        let ta = hasher.tokens(&Embedding::new(a)).unwrap();
        let tn = hasher.tokens(&Embedding::new(neg)).unwrap();
        assert!(ta.iter().zip(&tn).all(|(x, y)| x != y));
    }
}

fn code(bits: &[bool]) -> BinaryCode {
    BinaryCode::from_bits(bits)
}

proptest! {
    #[test]
    fn hamming_is_a_metric(
        (a, b, c) in (1usize..200).prop_flat_map(|n| (
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        ))
    ) {
        let (a, b, c) = (code(&a), code(&b), code(&c));
        let ab = hamming_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, hamming_distance(&b, &a).unwrap());
        prop_assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab == 0, a == b);
        let ac = hamming_distance(&a, &c).unwrap();
        let cb = hamming_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb);
    }

    #[test]
    fn tokens_deterministic_across_hasher_instances(
        values in prop::collection::vec(-10.0f32..10.0, 6),
        seed in any::<u64>(),
    ) {
        let e = Embedding::new(values.clone());
        let h1 = make_hasher(6, 8, 5, seed).unwrap();
        let h2 = make_hasher(6, 8, 5, seed).unwrap();
        prop_assert_eq!(h1.tokens(&e).unwrap(), h2.tokens(&e).unwrap());
        prop_assert_eq!(binarize(&e).len(), 6);
    }
}
