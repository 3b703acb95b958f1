use ice_core::combine;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weighted average written out term by term: each partial model has
/// weight 1, the whole model weight αM + βN.
fn oracle(partials: &[f64], whole: f64, n: usize, alpha: f64, beta: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &p in partials {
        num += 1.0 * p;
        den += 1.0;
    }
    let ww = alpha * partials.len() as f64 + beta * n as f64;
    num += ww * whole;
    den += ww;
    if den == 0.0 {
        whole
    } else {
        num / den
    }
}

#[test]
fn randomized_cases_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let m = rng.random_range(0..40);
        let partials: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let whole: f64 = rng.random();
        let n = rng.random_range(1..12);
        let alpha = rng.random_range(0.0..4.0);
        let beta = rng.random_range(0.0..4.0);
        let got = combine(&partials, whole, n, alpha, beta).prob;
        assert!((got - oracle(&partials, whole, n, alpha, beta)).abs() < 1e-12);
    }
}

#[test]
fn hand_computed() {
    // (0.8 + 0.6 + (2 + 5) * 0.5) / (2 * 2 + 5)
    assert!((combine(&[0.8, 0.6], 0.5, 5, 1.0, 1.0).prob - 4.9 / 9.0).abs() < 1e-12);
    assert_eq!(combine(&[], 0.7, 5, 1.0, 1.0).prob, 0.7);
    assert!((combine(&[1.0, 0.0, 0.5], 0.9, 5, 0.0, 0.0).prob - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn convex_combination(
        partials in prop::collection::vec(0.0f64..=1.0, 0..30),
        whole in 0.0f64..=1.0,
        n in 1usize..20,
        alpha in 0.0f64..10.0,
        beta in 0.0f64..10.0,
    ) {
        let p = combine(&partials, whole, n, alpha, beta).prob;
        let lo = partials.iter().copied().fold(whole, f64::min);
        let hi = partials.iter().copied().fold(whole, f64::max);
        prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
    }
}
