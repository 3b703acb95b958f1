use ice_core::auc;
use proptest::prelude::*;

/// Count positive/negative pairs directly.
fn pair_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn two_class(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

// coarse grid so ties are frequent
fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec((0u32..20).prop_map(|v| v as f64 / 19.0), n),
            prop::collection::vec(0u8..=1, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rank_equals_pair_counting((scores, labels) in scores_and_labels()) {
        prop_assume!(two_class(&labels));
        let a = auc(&scores, &labels).unwrap();
        prop_assert!((a - pair_auc(&scores, &labels)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn monotone_transform_invariance(scores in prop::collection::vec(-3.0f64..3.0, 2..60), seed in any::<u64>()) {
        let labels: Vec<u8> = scores.iter().enumerate().map(|(i, _)| ((seed >> (i % 64)) & 1) as u8).collect();
        prop_assume!(two_class(&labels));
        let t: Vec<f64> = scores.iter().map(|x| x * x * x + x).collect();
        prop_assert!((auc(&scores, &labels).unwrap() - auc(&t, &labels).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn label_complement(scores in prop::collection::vec(0.0f64..1.0, 2..60), seed in any::<u64>()) {
        let labels: Vec<u8> = (0..scores.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        prop_assume!(two_class(&labels));
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));
        let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        let sum = auc(&scores, &labels).unwrap() + auc(&scores, &flipped).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn worked_examples() {
    assert_eq!(auc(&[0.9, 0.8, 0.3, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
    assert_eq!(auc(&[0.4; 6], &[1, 0, 1, 0, 1, 0]).unwrap(), 0.5);
    assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
    assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
}
