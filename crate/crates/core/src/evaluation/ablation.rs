use std::time::Instant;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::cv::{folds_for, EvalConfig, EvalRow, FoldData};
use crate::association::{train_on_clusters, DecisionTable, IceModel, IceParams};
use crate::data::Dataset;
use crate::error::Result;
use crate::graphcluster::{fuzzy_cluster, ClusterSet};
use crate::inference::{find_neighbors, predict_with_neighbors};
use crate::seed::{self, sub_seed};

/// Which components to replace by a random control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Fuzzy clusters become random subsets of the same sizes.
    pub randomize_c1: bool,
    /// Decision-table rows are shuffled.
    pub randomize_c2: bool,
    /// Neighbors are drawn uniformly instead of by distance.
    pub randomize_c3: bool,
    pub seed: u64,
}

impl AblationFlags {
    pub fn new(c1: bool, c2: bool, c3: bool, seed: u64) -> Self {
        AblationFlags {
            randomize_c1: c1,
            randomize_c2: c2,
            randomize_c3: c3,
            seed,
        }
    }

    /// `ablate-none`, `ablate-c2`, `ablate-c1+c3`, ...
    pub fn method_id(&self) -> String {
        let parts: Vec<&str> = [
            (self.randomize_c1, "c1"),
            (self.randomize_c2, "c2"),
            (self.randomize_c3, "c3"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
        if parts.is_empty() {
            "ablate-none".into()
        } else {
            format!("ablate-{}", parts.join("+"))
        }
    }
}

/// Cross-validated ICE with α = β = 0 and the selected components
/// randomized. Folds, normalization and training seeds match
/// [`cross_validate`](super::cross_validate) for the same `seed`.
pub fn ablate(
    dataset: &Dataset,
    dataset_id: &str,
    flags: AblationFlags,
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    Ok(ablate_many(dataset, dataset_id, &[flags], config, seed)?.remove(0))
}

/// Several ablation arms over the same folds; arms with the same C1 setting
/// share their trained model per fold.
pub fn ablate_many(
    dataset: &Dataset,
    dataset_id: &str,
    variants: &[AblationFlags],
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<Vec<EvalRow>>> {
    let (_, folds) = folds_for(dataset, config, seed)?;
    let mut out: Vec<Vec<EvalRow>> = vec![Vec::with_capacity(folds.len()); variants.len()];
    for fd in &folds {
        let mut trained: Vec<((bool, u64), IceModel, f64)> = Vec::new();
        for (v, flags) in variants.iter().enumerate() {
            let key = (flags.randomize_c1, flags.seed);
            let started = Instant::now();
            let cached = trained.iter().position(|(k, _, _)| *k == key);
            let idx = match cached {
                Some(i) => i,
                None => {
                    let model = train_arm(fd, flags, config)?;
                    trained.push((key, model, started.elapsed().as_secs_f64()));
                    trained.len() - 1
                }
            };
            let (_, model, train_secs) = &trained[idx];
            let started = Instant::now();
            let (scores, mean_models) = score_arm(fd, model, flags)?;
            out[v].push(EvalRow {
                dataset: dataset_id.to_string(),
                method: flags.method_id(),
                fold: fd.fold,
                auc: auc(&scores, &fd.test_y)?,
                mean_models,
                seconds: train_secs + started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(out)
}

fn arm_params(fd: &FoldData, config: &EvalConfig) -> IceParams {
    IceParams {
        seed: fd.seed,
        alpha: 0.0,
        beta: 0.0,
        ..config.ice.clone()
    }
}

fn train_arm(fd: &FoldData, flags: &AblationFlags, config: &EvalConfig) -> Result<IceModel> {
    let params = arm_params(fd, config);
    params.validate()?;
    let (clusters, _) = fuzzy_cluster(
        fd.train_x.view(),
        params.clusters,
        &params.cluster_options(),
    )?;
    let clusters = if flags.randomize_c1 {
        random_bags(
            &clusters,
            sub_seed(flags.seed, seed::stream::ABLATE_C1, fd.fold as u64),
        )?
    } else {
        clusters
    };
    train_on_clusters(
        fd.train_x.clone(),
        fd.train.y.clone(),
        clusters,
        &params,
        &config.base,
        fd.scaler.clone(),
    )
}

/// Replace each partial cluster with a uniform random subset of the same
/// size. Members are drawn without replacement so a bag stays a set.
pub(crate) fn random_bags(clusters: &ClusterSet, seed: u64) -> Result<ClusterSet> {
    let n = clusters.n;
    let partials = clusters.clusters[..clusters.len() - 1]
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut rng = seed::rng(sub_seed(seed, j as u64, 0));
            index::sample(&mut rng, n, c.len()).into_vec()
        })
        .collect();
    let mut out = ClusterSet::from_partial(partials, clusters.centers.clone(), clusters.z, n)?;
    out.requested_l = clusters.requested_l;
    Ok(out)
}

/// A uniformly random permutation that is never the identity (for n ≥ 2).
pub(crate) fn shuffled_rows(decision: &DecisionTable, seed: u64) -> DecisionTable {
    let q = decision.n_instances();
    let mut rng = seed::rng(seed);
    let mut perm: Vec<usize> = (0..q).collect();
    if q >= 2 {
        loop {
            perm.shuffle(&mut rng);
            if perm.iter().enumerate().any(|(i, &p)| i != p) {
                break;
            }
        }
    }
    let mut d = decision.0.clone();
    for (i, &src) in perm.iter().enumerate() {
        d.row_mut(i).assign(&decision.0.row(src));
    }
    DecisionTable(d)
}

fn score_arm(fd: &FoldData, model: &IceModel, flags: &AblationFlags) -> Result<(Vec<f64>, f64)> {
    let shuffled;
    let model = if flags.randomize_c2 {
        let mut m = model.clone();
        m.decision = shuffled_rows(
            &model.decision,
            sub_seed(flags.seed, seed::stream::ABLATE_C2, fd.fold as u64),
        );
        shuffled = m;
        &shuffled
    } else {
        model
    };
    let q = model.train_x.nrows();
    let n = model.params.neighbors.min(q);
    let c3_seed = sub_seed(flags.seed, seed::stream::ABLATE_C3, fd.fold as u64);
    let mut scores = Vec::with_capacity(fd.test_x.nrows());
    let mut unique = 0usize;
    for (t, row) in fd.test_x.rows().into_iter().enumerate() {
        let neighbors = if flags.randomize_c3 {
            let mut rng = seed::rng(sub_seed(c3_seed, t as u64, 0));
            index::sample(&mut rng, q, n).into_vec()
        } else {
            find_neighbors(row, model.train_x.view(), model.params.neighbors)?
        };
        let ctx = predict_with_neighbors(model, row, neighbors);
        unique += ctx.unique_models();
        scores.push(ctx.final_prob);
    }
    let mean = unique as f64 / scores.len().max(1) as f64;
    Ok((scores, mean))
}
