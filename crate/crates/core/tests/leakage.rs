//! Instrumented learner: every fit returns a constant whose value is a
//! unique code, and records which instances it was trained on.

use std::collections::HashMap;
use std::sync::Mutex;

use ice_core::{
    build_prediction_matrix, fuzzy_cluster, Classifier, ClusterOptions, Result, TrainedModel,
};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Recorder {
    fits: Mutex<Vec<Vec<usize>>>,
}

fn code(k: usize) -> f64 {
    // below the 0.01 floor of the constant fallback, so never confused with it
    (k + 1) as f64 * 1e-6
}

impl Classifier for Recorder {
    fn fit(
        &self,
        x: ArrayView2<f64>,
        _y: &[u8],
        _w: Option<&[f64]>,
        _seed: u64,
    ) -> Result<TrainedModel> {
        // column 0 carries the instance index
        let ids: Vec<usize> = x.column(0).iter().map(|&v| v as usize).collect();
        let mut fits = self.fits.lock().unwrap();
        fits.push(ids);
        Ok(TrainedModel::Constant {
            p: code(fits.len() - 1),
        })
    }
}

fn dataset(seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rng.random_range(40..120);
    let mut x = Array2::zeros((q, 3));
    let mut y = Vec::with_capacity(q);
    for i in 0..q {
        x[[i, 0]] = i as f64;
        x[[i, 1]] = rng.random_range(-2.0..2.0);
        x[[i, 2]] = rng.random_range(-2.0..2.0);
        y.push(u8::from(i % 2 == 0));
    }
    (x, y)
}

#[test]
fn member_cells_never_see_their_instance() {
    for seed in 0..5 {
        let (x, y) = dataset(seed);
        let q = x.nrows();
        let opts = ClusterOptions {
            min_cluster_size: 20,
            ..ClusterOptions::default()
        };
        let (clusters, _) = fuzzy_cluster(x.view(), 12, &opts).unwrap();
        let recorder = Recorder::default();
        let pool: Vec<TrainedModel> = clusters
            .clusters
            .iter()
            .map(|c| {
                recorder
                    .fit(x.select(ndarray::Axis(0), c).view(), &[], None, 0)
                    .unwrap()
            })
            .collect();
        let p =
            build_prediction_matrix(x.view(), &y, &clusters, &pool, &recorder, 10, seed).unwrap();
        let fits = recorder.fits.lock().unwrap();
        let by_code: HashMap<u64, usize> =
            (0..fits.len()).map(|k| (code(k).to_bits(), k)).collect();
        let mut checked = 0;
        for (j, members) in clusters.clusters.iter().enumerate() {
            for &i in members {
                let v = p[[i, j]];
                if members.len() == 1 {
                    assert_eq!(v, 0.5);
                    continue;
                }
                let k = *by_code
                    .get(&v.to_bits())
                    .unwrap_or_else(|| panic!("P[{i}][{j}] = {v} has no recorded fit"));
                assert!(
                    !fits[k].contains(&i),
                    "P[{i}][{j}] came from a model trained on {i}"
                );
                assert!(
                    fits[k].iter().all(|t| members.contains(t)),
                    "inner fit left cluster {j}"
                );
                checked += 1;
            }
            // remote cells use the pool model itself
            for i in (0..q).filter(|i| !members.contains(i)) {
                assert_eq!(p[[i, j]], pool[j].predict_proba(x.row(i)));
            }
        }
        assert!(checked >= q);
    }
}
