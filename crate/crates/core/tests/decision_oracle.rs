use ice_core::{build_decision_table, ClusterSet};
use ndarray::Array2;
use proptest::prelude::*;

/// Direct transcription of the association rule: start from the raw
/// error table, subtract `s` for local entries and `w` for the whole
/// column, then compare every entry with the adjusted whole error.
fn brute(e: &Array2<f64>, clusters: &[Vec<usize>], w: f64, s: f64) -> Array2<u8> {
    let (q, l) = e.dim();
    let mut adj = e.clone();
    for i in 0..q {
        for j in 0..l - 1 {
            if clusters[j].contains(&i) {
                adj[[i, j]] -= s;
            }
        }
        adj[[i, l - 1]] -= w;
    }
    let mut d = Array2::zeros((q, l));
    for i in 0..q {
        for j in 0..l {
            d[[i, j]] = if adj[[i, j]] <= adj[[i, l - 1]] { 1 } else { 0 };
        }
    }
    d
}

fn case() -> impl Strategy<Value = (Array2<f64>, Vec<Vec<usize>>)> {
    (1usize..=50, 2usize..=10).prop_flat_map(|(q, l)| {
        (
            prop::collection::vec(0.0f64..=1.0, q * l),
            prop::collection::vec(prop::collection::vec(any::<bool>(), q), l - 1),
        )
            .prop_map(move |(vals, member)| {
                let e = Array2::from_shape_vec((q, l), vals).unwrap();
                let clusters = member
                    .into_iter()
                    .enumerate()
                    .map(|(j, m)| {
                        let mut c: Vec<usize> = m
                            .iter()
                            .enumerate()
                            .filter(|(_, &b)| b)
                            .map(|(i, _)| i)
                            .collect();
                        if c.is_empty() {
                            c.push(j % q);
                        }
                        c
                    })
                    .collect();
                (e, clusters)
            })
    })
}

fn set(e: &Array2<f64>, clusters: &[Vec<usize>]) -> ClusterSet {
    let centers = clusters.iter().map(|c| c[0]).collect();
    ClusterSet::from_partial(clusters.to_vec(), centers, 1.0, e.nrows()).unwrap()
}

fn ones_outside_whole(d: &Array2<u8>) -> usize {
    let l = d.ncols();
    d.columns()
        .into_iter()
        .take(l - 1)
        .map(|c| c.iter().map(|&v| v as usize).sum::<usize>())
        .sum()
}

fn local_ones(d: &Array2<u8>, clusters: &[Vec<usize>]) -> usize {
    clusters
        .iter()
        .enumerate()
        .map(|(j, c)| c.iter().map(|&i| d[[i, j]] as usize).sum::<usize>())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force((e, clusters) in case(), w in 0.0f64..1.0, s in 0.0f64..1.0) {
        let got = build_decision_table(e.view(), &set(&e, &clusters), w, s).unwrap();
        prop_assert_eq!(&got.0, &brute(&e, &clusters, w, s));
        prop_assert!(got.whole_column_all_ones());
    }

    #[test]
    fn sweeps_are_monotone((e, clusters) in case(), w in 0.0f64..1.0, s in 0.0f64..1.0, dw in 0.0f64..0.5, ds in 0.0f64..0.5) {
        let cs = set(&e, &clusters);
        let base = build_decision_table(e.view(), &cs, w, s).unwrap().0;
        let more_w = build_decision_table(e.view(), &cs, w + dw, s).unwrap().0;
        let more_s = build_decision_table(e.view(), &cs, w, s + ds).unwrap().0;
        prop_assert!(ones_outside_whole(&more_w) <= ones_outside_whole(&base));
        prop_assert!(local_ones(&more_s, &clusters) >= local_ones(&base, &clusters));
    }
}
