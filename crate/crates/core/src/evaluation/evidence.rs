use ndarray::Axis;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::kmeans::kmeans_restarts;
use crate::data::{stratified_folds, Dataset, Scaler};
use crate::error::Result;
use crate::learners::{fit_or_constant, Classifier};
use crate::seed::{self, sub_seed};

/// Cross-validation folds inside each test cluster.
pub const EVIDENCE_FOLDS: usize = 5;
/// Size-matched redraws averaged per cell.
pub const EVIDENCE_REPEATS: usize = 5;
/// Smallest cluster the experiment will test on.
pub const EVIDENCE_MIN_CLUSTER: usize = 10;
/// k-means runs per experiment; the lowest-inertia clustering is used.
pub const EVIDENCE_KMEANS_RESTARTS: usize = 10;

/// Cross-testing of three k-means clusters.
///
/// Row `r` is test cluster `r` (a, b, c by decreasing size); column `s` is
/// the training source: cluster a, b, c or the whole dataset. `None` marks a
/// cell that could not be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub cluster_sizes: Vec<usize>,
    pub sources: Vec<String>,
    pub auc: Vec<Vec<Option<f64>>>,
    /// Cluster-trained AUC minus whole-trained AUC.
    pub gain: Vec<Vec<Option<f64>>>,
    pub folds: usize,
    pub repeats: usize,
    pub protocol: String,
}

impl EvidenceReport {
    pub fn diagonal_gains(&self) -> Vec<Option<f64>> {
        (0..3).map(|r| self.gain[r][r]).collect()
    }
}

const PROTOCOL: &str = "global z-score; k-means (k=3, best of 10 k-means++ restarts) clusters ordered by size; \
stratified 5-fold CV inside each test cluster, repeated 5 times with fresh folds and draws; \
each training set has the size of the test cluster's training part: the test cluster itself uses it as is, \
another cluster contributes a random subset of that size (or all of its members when smaller), \
the whole source samples from every instance outside the held-out fold; \
AUC pooled over folds, averaged over repeats";

/// Whether specialized training data helps inside feature-space regions.
pub fn subdomain_evidence(
    dataset: &Dataset,
    base: &dyn Classifier,
    seed: u64,
) -> Result<EvidenceReport> {
    let scaler = Scaler::fit(dataset.x.view())?;
    let x = scaler.transform(dataset.x.view())?;
    let y = &dataset.y;
    let km = kmeans_restarts(
        x.view(),
        3,
        sub_seed(seed, seed::stream::EVIDENCE, 0),
        300,
        EVIDENCE_KMEANS_RESTARTS,
    )?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); 3];
    for (i, &c) in km.assignment.iter().enumerate() {
        groups[c].push(i);
    }
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));
    let usable: Vec<bool> = groups
        .iter()
        .map(|g| {
            let pos = g.iter().filter(|&&i| y[i] == 1).count();
            // Stratified folds need at least two members of each class.
            g.len() >= EVIDENCE_MIN_CLUSTER && pos >= 2 && g.len() - pos >= 2
        })
        .collect();

    let q = x.nrows();
    let mut auc_m = vec![vec![None; 4]; 3];
    for (r, test) in groups.iter().enumerate() {
        if !usable[r] {
            continue;
        }
        let test_y: Vec<u8> = test.iter().map(|&i| y[i]).collect();
        let mut sums = [0.0f64; 4];
        let mut ok = [true; 4];
        for rep in 0..EVIDENCE_REPEATS {
            let rep_seed = sub_seed(
                seed,
                seed::stream::EVIDENCE,
                (1 + r * EVIDENCE_REPEATS + rep) as u64,
            );
            let folds = stratified_folds(&test_y, EVIDENCE_FOLDS, rep_seed)?;
            let mut scores = vec![vec![0.0; test.len()]; 4];
            for f in 0..folds.k {
                let held: Vec<usize> = folds.test_indices(f);
                let kept: Vec<usize> = folds.train_indices(f).iter().map(|&p| test[p]).collect();
                let mut in_fold = vec![false; q];
                for &p in &held {
                    in_fold[test[p]] = true;
                }
                let n = kept.len();
                for s in 0..4 {
                    if s < 3 && !usable[s] {
                        ok[s] = false;
                        continue;
                    }
                    let mut rng = seed::rng(sub_seed(rep_seed, (f * 4 + s) as u64, 1));
                    let train: Vec<usize> = if s == r {
                        kept.clone()
                    } else {
                        let pool: Vec<usize> = if s < 3 {
                            groups[s].clone()
                        } else {
                            (0..q).filter(|&i| !in_fold[i]).collect()
                        };
                        if pool.len() <= n {
                            pool
                        } else {
                            let mut pick: Vec<usize> = index::sample(&mut rng, pool.len(), n)
                                .into_iter()
                                .map(|k| pool[k])
                                .collect();
                            pick.sort_unstable();
                            pick
                        }
                    };
                    let tx = x.select(Axis(0), &train);
                    let ty: Vec<u8> = train.iter().map(|&i| y[i]).collect();
                    let model = fit_or_constant(
                        base,
                        tx.view(),
                        &ty,
                        None,
                        sub_seed(rep_seed, (f * 4 + s) as u64, 2),
                    )?;
                    for &p in &held {
                        scores[s][p] = model.predict_proba(x.row(test[p]));
                    }
                }
            }
            for s in 0..4 {
                if ok[s] {
                    sums[s] += auc(&scores[s], &test_y)?;
                }
            }
        }
        for s in 0..4 {
            if ok[s] {
                auc_m[r][s] = Some(sums[s] / EVIDENCE_REPEATS as f64);
            }
        }
    }
    let gain = auc_m
        .iter()
        .map(|row| {
            let whole = row[3];
            row.iter().map(|a| Some(a.as_ref()? - whole?)).collect()
        })
        .collect();
    Ok(EvidenceReport {
        cluster_sizes: groups.iter().map(Vec::len).collect(),
        sources: ["a", "b", "c", "whole"].map(String::from).to_vec(),
        auc: auc_m,
        gain,
        folds: EVIDENCE_FOLDS,
        repeats: EVIDENCE_REPEATS,
        protocol: PROTOCOL.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::BaseLearner;
    use ndarray::Array2;

    /// 60 rows in three blocks of 20 at the corners of a triangle; x1 carries
    /// the label signal. `label(i, block, x1)` decides y.
    fn blocks(label: impl Fn(usize, usize, f64) -> u8) -> Dataset {
        let mut x = Array2::zeros((60, 3));
        let mut y = Vec::new();
        for i in 0..60 {
            let block = i / 20;
            let angle = block as f64 * std::f64::consts::TAU / 3.0;
            x[[i, 0]] = 10.0 * angle.cos() + (i % 7) as f64 * 0.1;
            x[[i, 1]] = (i % 5) as f64 - 2.0;
            x[[i, 2]] = 10.0 * angle.sin() + (i % 3) as f64 * 0.1;
            y.push(label(i, block, x[[i, 1]]));
        }
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn shape_is_three_by_four() {
        let ds = blocks(|_, _, x1| u8::from(x1 > 0.0));
        let rep = subdomain_evidence(&ds, &BaseLearner::logistic(), 1).unwrap();
        assert_eq!(rep.auc.len(), 3);
        assert!(rep.gain.iter().all(|r| r.len() == 4));
        for r in 0..3 {
            assert_eq!(rep.gain[r][3], Some(0.0));
        }
        assert_eq!(rep.cluster_sizes.iter().sum::<usize>(), 60);
    }

    #[test]
    fn single_class_cluster_is_not_applicable() {
        let ds = blocks(|_, block, x1| if block == 2 { 1 } else { u8::from(x1 > 0.0) });
        let rep = subdomain_evidence(&ds, &BaseLearner::logistic(), 1).unwrap();
        let na_rows = rep
            .auc
            .iter()
            .filter(|r| r.iter().all(Option::is_none))
            .count();
        assert_eq!(na_rows, 1);
        let na_cols = (0..3)
            .filter(|&s| rep.auc.iter().all(|r| r[s].is_none()))
            .count();
        assert_eq!(na_cols, 1);
    }

    #[test]
    fn lone_minority_instance_is_not_applicable() {
        let ds = blocks(|i, block, x1| {
            if block == 2 {
                u8::from(i != 45)
            } else {
                u8::from(x1 > 0.0)
            }
        });
        let rep = subdomain_evidence(&ds, &BaseLearner::logistic(), 1).unwrap();
        assert_eq!(
            rep.auc
                .iter()
                .filter(|r| r.iter().all(Option::is_none))
                .count(),
            1
        );
    }
}
