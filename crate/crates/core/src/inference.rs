//! Per-instance ensemble construction at prediction time.

use std::collections::BTreeSet;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::association::{DecisionTable, IceModel};
use crate::error::{IceError, Result};

/// What went into one prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionContext {
    pub neighbor_indices: Vec<usize>,
    /// Pool indices of the selected partial models, duplicates kept.
    pub selected_models: Vec<usize>,
    pub partial_probs: Vec<f64>,
    pub whole_prob: f64,
    pub final_prob: f64,
    /// Set when no weight was left for any term and the whole model was
    /// returned as is.
    pub fell_back: bool,
}

impl PredictionContext {
    /// `M`, the number of selected partial models with multiplicity.
    pub fn m(&self) -> usize {
        self.selected_models.len()
    }

    pub fn unique_models(&self) -> usize {
        self.selected_models.iter().collect::<BTreeSet<_>>().len()
    }
}

/// The `n` training rows closest to `x` in Euclidean distance, nearest
/// first. Ties go to the lower index; `n > Q` returns every row.
pub fn find_neighbors(
    x: ArrayView1<f64>,
    train_x: ArrayView2<f64>,
    n: usize,
) -> Result<Vec<usize>> {
    if x.len() != train_x.ncols() {
        return Err(IceError::DimensionMismatch {
            expected: train_x.ncols(),
            found: x.len(),
        });
    }
    if n == 0 {
        return Err(IceError::InvalidParameter(
            "neighbor count must be >= 1".into(),
        ));
    }
    let dist: Vec<f64> = train_x
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let mut order: Vec<usize> = (0..dist.len()).collect();
    let cmp = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b));
    let n = n.min(order.len());
    if n < order.len() {
        order.select_nth_unstable_by(n, cmp);
        order.truncate(n);
    }
    order.sort_by(cmp);
    Ok(order)
}

/// Partial models associated with the neighbors, one entry per
/// (neighbor, model) association. The whole-model column is skipped.
pub fn collect_models(decision: &DecisionTable, neighbors: &[usize]) -> Vec<usize> {
    let partials = decision.n_models() - 1;
    neighbors
        .iter()
        .flat_map(|&k| (0..partials).filter(move |&j| decision.get(k, j)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Combination {
    pub prob: f64,
    pub fell_back: bool,
}

/// Blend partial predictions with the whole model:
/// `(Σ partial + (αM + βN)·whole) / ((α + 1)M + βN)`.
/// A zero denominator returns `whole_prob` with `fell_back` set.
pub fn combine(
    partial_probs: &[f64],
    whole_prob: f64,
    n_neighbors: usize,
    alpha: f64,
    beta: f64,
) -> Combination {
    let m = partial_probs.len() as f64;
    let n = n_neighbors as f64;
    let whole_weight = alpha * m + beta * n;
    let denom = (alpha + 1.0) * m + beta * n;
    if denom <= 0.0 {
        return Combination {
            prob: whole_prob,
            fell_back: true,
        };
    }
    let sum: f64 = partial_probs.iter().sum();
    let prob = ((sum + whole_weight * whole_prob) / denom).clamp(0.0, 1.0);
    Combination {
        prob,
        fell_back: false,
    }
}

/// Combine the models associated with the given neighbors for an already
/// normalized feature vector.
pub fn predict_with_neighbors(
    model: &IceModel,
    x: ArrayView1<f64>,
    neighbors: Vec<usize>,
) -> PredictionContext {
    let selected = collect_models(&model.decision, &neighbors);
    let partial_probs: Vec<f64> = selected
        .iter()
        .map(|&j| model.pool[j].predict_proba(x))
        .collect();
    let whole_prob = model.whole_model().predict_proba(x);
    let c = combine(
        &partial_probs,
        whole_prob,
        model.params.neighbors,
        model.params.alpha,
        model.params.beta,
    );
    PredictionContext {
        neighbor_indices: neighbors,
        selected_models: selected,
        partial_probs,
        whole_prob,
        final_prob: c.prob,
        fell_back: c.fell_back,
    }
}

/// Predict one already-normalized feature vector.
pub fn predict_normalized(model: &IceModel, x: ArrayView1<f64>) -> Result<PredictionContext> {
    let neighbors = find_neighbors(x, model.train_x.view(), model.params.neighbors)?;
    Ok(predict_with_neighbors(model, x, neighbors))
}

/// Predict one raw feature vector: scale, find neighbors, combine.
pub fn predict_instance(x: &[f64], model: &IceModel) -> Result<(f64, PredictionContext)> {
    let scaled = model.scaler.transform_row(x)?;
    let ctx = predict_normalized(model, ArrayView1::from(&scaled))?;
    Ok((ctx.final_prob, ctx))
}

/// Hard label from a probability; 0.5 goes to class 1.
pub fn label_of(prob: f64) -> u8 {
    u8::from(prob >= 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exact_match_is_nearest() {
        let train = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [1.0, 1.0]];
        let nb = find_neighbors(array![1.0, 1.0].view(), train.view(), 1).unwrap();
        assert_eq!(nb, vec![1]);
    }

    #[test]
    fn neighbors_by_distance() {
        let train = array![[0.0], [10.0], [20.0]];
        assert_eq!(
            find_neighbors(array![9.0].view(), train.view(), 2).unwrap(),
            vec![1, 0]
        );
        assert_eq!(
            find_neighbors(array![19.0].view(), train.view(), 3).unwrap(),
            vec![2, 1, 0]
        );
        assert_eq!(
            find_neighbors(array![19.0].view(), train.view(), 9).unwrap(),
            vec![2, 1, 0]
        );
        assert!(find_neighbors(array![1.0, 2.0].view(), train.view(), 1).is_err());
    }

    #[test]
    fn collection_keeps_duplicates() {
        let d = DecisionTable(array![[1u8, 0, 1], [1, 1, 1], [0, 0, 1]]);
        assert_eq!(collect_models(&d, &[0, 1]), vec![0, 0, 1]);
        assert!(collect_models(&d, &[2]).is_empty());
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(&[], 0.7, 5, 1.0, 1.0).prob, 0.7);
        let c = combine(&[0.8, 0.6], 0.5, 5, 1.0, 1.0);
        assert!((c.prob - 4.9 / 9.0).abs() < 1e-12);
        let c = combine(&[1.0, 0.0, 0.5], 0.9, 5, 0.0, 0.0);
        assert!((c.prob - 0.5).abs() < 1e-15);
        let c = combine(&[], 0.3, 5, 1.0, 0.0);
        assert!(c.fell_back);
        assert_eq!(c.prob, 0.3);
    }

    #[test]
    fn huge_beta_tends_to_whole() {
        let c = combine(&[0.1, 0.2, 0.9], 0.6, 5, 1.0, 1e9);
        assert!((c.prob - 0.6).abs() < 1e-6);
    }

    #[test]
    fn half_is_class_one() {
        assert_eq!(label_of(0.5), 1);
        assert_eq!(label_of(0.4999), 0);
    }
}
