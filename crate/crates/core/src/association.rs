//! Training: one submodel per cluster, cross-validated error table, and the
//! instance-model decision table.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{assign_stratified, Dataset, Scaler};
use crate::error::{IceError, Result};
use crate::graphcluster::{fuzzy_cluster, ClusterOptions, ClusterSet};
use crate::learners::{fit_constant, fit_or_constant, Classifier, TrainedModel};
use crate::seed::{self, sub_seed};

/// Hyperparameters of training and prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IceParams {
    /// Cluster count `L`, including the whole-data cluster.
    pub clusters: usize,
    pub restart_p: f64,
    /// Average partial-cluster size; `None` means a third of the training set.
    pub avg_cluster_size: Option<f64>,
    /// Advantage subtracted from the whole model's error.
    pub w: f64,
    /// Advantage subtracted from a local model's error.
    pub s: f64,
    /// Neighbors consulted per prediction.
    pub neighbors: usize,
    pub alpha: f64,
    pub beta: f64,
    pub cv_folds: usize,
    pub seed: u64,
    pub min_cluster_size: usize,
    pub rwr_tol: f64,
    pub rwr_max_iter: usize,
}

impl Default for IceParams {
    fn default() -> Self {
        IceParams {
            clusters: 100,
            restart_p: 0.3,
            avg_cluster_size: None,
            w: 0.4,
            s: 0.5,
            neighbors: 5,
            alpha: 1.0,
            beta: 1.0,
            cv_folds: 10,
            seed: 42,
            min_cluster_size: 8,
            rwr_tol: 1e-8,
            rwr_max_iter: 200,
        }
    }
}

impl IceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IceError::InvalidParameter(msg));
        if self.clusters < 2 {
            return bad(format!("clusters must be >= 2, got {}", self.clusters));
        }
        if !(self.w >= 0.0 && self.s >= 0.0) {
            return bad(format!(
                "advantage scores must be >= 0 (w={}, s={})",
                self.w, self.s
            ));
        }
        if self.neighbors < 1 {
            return bad("neighbors must be >= 1".into());
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad(format!(
                "alpha and beta must be >= 0 (alpha={}, beta={})",
                self.alpha, self.beta
            ));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be >= 2, got {}", self.cv_folds));
        }
        if !(self.restart_p > 0.0 && self.restart_p <= 1.0) {
            return bad(format!(
                "restart probability must lie in (0, 1], got {}",
                self.restart_p
            ));
        }
        Ok(())
    }

    pub fn cluster_options(&self) -> ClusterOptions {
        ClusterOptions {
            restart_p: self.restart_p,
            tol: self.rwr_tol,
            max_iter: self.rwr_max_iter,
            z: self.avg_cluster_size,
            min_cluster_size: self.min_cluster_size,
        }
    }
}

/// Binary `Q x L` association of training instances to pool models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTable(pub Array2<u8>);

impl DecisionTable {
    pub fn n_instances(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, instance: usize, model: usize) -> bool {
        self.0[[instance, model]] != 0
    }

    pub fn whole_column_all_ones(&self) -> bool {
        let last = self.n_models() - 1;
        self.0.column(last).iter().all(|&v| v == 1)
    }

    /// Fraction of ones in each column.
    pub fn column_density(&self) -> Vec<f64> {
        let q = self.n_instances() as f64;
        self.0
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|&v| f64::from(v)).sum::<f64>() / q)
            .collect()
    }

    /// Ones per row, excluding the whole-model column.
    pub fn partial_counts(&self) -> Vec<usize> {
        let last = self.n_models() - 1;
        self.0
            .rows()
            .into_iter()
            .map(|r| r.iter().take(last).filter(|&&v| v == 1).count())
            .collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.0.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let q = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        if q == 0 || l == 0 || rows.iter().any(|r| r.len() != l) {
            return Err(IceError::ModelFormat(
                "decision table rows are empty or ragged".into(),
            ));
        }
        let flat: Vec<u8> = rows.iter().flatten().copied().collect();
        if flat.iter().any(|&v| v > 1) {
            return Err(IceError::ModelFormat(
                "decision table entries must be 0 or 1".into(),
            ));
        }
        Ok(DecisionTable(
            Array2::from_shape_vec((q, l), flat).expect("shape checked"),
        ))
    }
}

/// Everything computed while associating instances with models.
#[derive(Clone, Debug)]
pub struct DecisionArtifacts {
    /// Cross-validated probability of class 1, `Q x L`.
    pub predictions: Array2<f64>,
    /// `|P - Y|` before any advantage adjustment.
    pub errors: Array2<f64>,
    pub decision: DecisionTable,
}

/// A trained ensemble, ready for prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct IceModel {
    /// Normalized training features, kept for neighbor search.
    pub train_x: Array2<f64>,
    pub train_y: Vec<u8>,
    pub clusters: ClusterSet,
    /// One model per cluster; the last one is the whole model.
    pub pool: Vec<TrainedModel>,
    pub decision: DecisionTable,
    /// Raw error table; lets `w` and `s` be re-swept without retraining.
    pub raw_errors: Option<Array2<f64>>,
    pub params: IceParams,
    pub scaler: Scaler,
}

impl IceModel {
    pub fn n_models(&self) -> usize {
        self.pool.len()
    }

    pub fn whole_model(&self) -> &TrainedModel {
        self.pool.last().expect("pool is never empty")
    }

    /// Rebuild `P` from the stored error table.
    pub fn decision_artifacts(&self) -> Option<DecisionArtifacts> {
        let errors = self.raw_errors.clone()?;
        let mut predictions = errors.clone();
        for (mut row, &y) in predictions.rows_mut().into_iter().zip(&self.train_y) {
            if y == 1 {
                row.mapv_inplace(|e| 1.0 - e);
            }
        }
        Some(DecisionArtifacts {
            predictions,
            errors,
            decision: self.decision.clone(),
        })
    }
}

/// Cross-validated prediction matrix.
///
/// Column `j` holds, for instances outside `c_j`, the pool model's direct
/// prediction; for members of `c_j`, the prediction of a model trained on
/// the other inner folds of `c_j`. Inner folds are stratified, use
/// `min(cv_folds, |c_j|)` folds and a sub-seed derived from `seed` and `j`.
pub fn build_prediction_matrix(
    x: ArrayView2<f64>,
    y: &[u8],
    clusters: &ClusterSet,
    pool: &[TrainedModel],
    base: &dyn Classifier,
    cv_folds: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let q = x.nrows();
    if y.len() != q || clusters.n != q {
        return Err(IceError::DimensionMismatch {
            expected: q,
            found: clusters.n,
        });
    }
    if pool.len() != clusters.len() {
        return Err(IceError::DimensionMismatch {
            expected: clusters.len(),
            found: pool.len(),
        });
    }
    let columns: Vec<Vec<f64>> = (0..clusters.len())
        .into_par_iter()
        .map(|j| {
            prediction_column(
                x,
                y,
                &clusters.clusters[j],
                &pool[j],
                base,
                cv_folds,
                sub_seed(seed, seed::stream::INNER_CV, j as u64),
            )
        })
        .collect::<Result<_>>()?;
    let mut p = Array2::zeros((q, clusters.len()));
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            p[[i, j]] = v;
        }
    }
    Ok(p)
}

fn prediction_column(
    x: ArrayView2<f64>,
    y: &[u8],
    members: &[usize],
    model: &TrainedModel,
    base: &dyn Classifier,
    cv_folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut col: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| model.predict_proba(r))
        .collect();
    let k = cv_folds.min(members.len());
    if k < 2 {
        // a lone member has nothing else to learn from
        for &i in members {
            col[i] = 0.5;
        }
        return Ok(col);
    }
    let member_y: Vec<u8> = members.iter().map(|&i| y[i]).collect();
    let fold_of = assign_stratified(&member_y, k, seed);
    for f in 0..k {
        let train: Vec<usize> = members
            .iter()
            .zip(&fold_of)
            .filter(|(_, &g)| g != f)
            .map(|(&i, _)| i)
            .collect();
        let test: Vec<usize> = members
            .iter()
            .zip(&fold_of)
            .filter(|(_, &g)| g == f)
            .map(|(&i, _)| i)
            .collect();
        let tx = x.select(Axis(0), &train);
        let ty: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let fold_model = if ty.is_empty() {
            fit_constant(&[0, 1], None)?
        } else {
            fit_or_constant(
                base,
                tx.view(),
                &ty,
                None,
                sub_seed(seed, seed::stream::FOLDS, f as u64),
            )?
        };
        for i in test {
            col[i] = fold_model.predict_proba(x.row(i));
        }
    }
    Ok(col)
}

/// Apply advantage scores to a copy of `errors` and associate models.
///
/// The whole model's error drops by `w`, a local model's by `s`; model `j`
/// is associated with instance `i` when its adjusted error is at most the
/// adjusted whole-model error.
pub fn build_decision_table(
    errors: ArrayView2<f64>,
    clusters: &ClusterSet,
    w: f64,
    s: f64,
) -> Result<DecisionTable> {
    let (q, l) = errors.dim();
    if l != clusters.len() {
        return Err(IceError::DimensionMismatch {
            expected: clusters.len(),
            found: l,
        });
    }
    if q != clusters.n {
        return Err(IceError::DimensionMismatch {
            expected: clusters.n,
            found: q,
        });
    }
    let membership = clusters.membership();
    let mut d = Array2::zeros((q, l));
    for i in 0..q {
        let whole = errors[[i, l - 1]] - w;
        for j in 0..l {
            let adjusted = if j == l - 1 {
                whole
            } else if membership[j][i] {
                errors[[i, j]] - s
            } else {
                errors[[i, j]]
            };
            d[[i, j]] = u8::from(adjusted <= whole);
        }
    }
    Ok(DecisionTable(d))
}

/// Train on already-normalized features with a given cluster set.
pub fn train_on_clusters(
    train_x: Array2<f64>,
    train_y: Vec<u8>,
    clusters: ClusterSet,
    params: &IceParams,
    base: &dyn Classifier,
    scaler: Scaler,
) -> Result<IceModel> {
    params.validate()?;
    let pool: Vec<TrainedModel> = clusters
        .clusters
        .par_iter()
        .enumerate()
        .map(|(j, members)| {
            let cx = train_x.select(Axis(0), members);
            let cy: Vec<u8> = members.iter().map(|&i| train_y[i]).collect();
            fit_or_constant(
                base,
                cx.view(),
                &cy,
                None,
                sub_seed(params.seed, seed::stream::POOL, j as u64),
            )
        })
        .collect::<Result<_>>()?;

    let p = build_prediction_matrix(
        train_x.view(),
        &train_y,
        &clusters,
        &pool,
        base,
        params.cv_folds,
        params.seed,
    )?;
    let mut errors = p;
    for (mut row, &y) in errors.rows_mut().into_iter().zip(&train_y) {
        let target = f64::from(y);
        row.mapv_inplace(|v| (v - target).abs());
    }
    let decision = build_decision_table(errors.view(), &clusters, params.w, params.s)?;
    if !decision.whole_column_all_ones() {
        return Err(IceError::Invariant(
            "whole-model column of the decision table has a zero".into(),
        ));
    }
    Ok(IceModel {
        train_x,
        train_y,
        clusters,
        pool,
        decision,
        raw_errors: Some(errors),
        params: params.clone(),
        scaler,
    })
}

/// Normalize with `scaler`, cluster, and train.
pub fn train_ice_with_scaler(
    dataset: &Dataset,
    scaler: Scaler,
    params: &IceParams,
    base: &dyn Classifier,
) -> Result<IceModel> {
    params.validate()?;
    let x = scaler.transform(dataset.x.view())?;
    let (clusters, _) = fuzzy_cluster(x.view(), params.clusters, &params.cluster_options())?;
    train_on_clusters(x, dataset.y.clone(), clusters, params, base, scaler)
}

/// Fit a z-score scaler on `dataset`, then cluster and train.
pub fn train_ice(dataset: &Dataset, params: &IceParams, base: &dyn Classifier) -> Result<IceModel> {
    let scaler = Scaler::fit(dataset.x.view())?;
    train_ice_with_scaler(dataset, scaler, params, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn three_clusters() -> ClusterSet {
        ClusterSet::from_partial(vec![vec![0], vec![1]], vec![0, 1], 1.0, 2).unwrap()
    }

    #[test]
    fn hand_worked_row() {
        // instance 0 is in cluster 0 (local) but not cluster 1 (remote)
        let e = array![[0.30, 0.70, 0.35], [0.5, 0.5, 0.5]];
        let d = build_decision_table(e.view(), &three_clusters(), 0.4, 0.5).unwrap();
        assert_eq!(d.0.row(0).to_vec(), vec![1, 0, 1]);
    }

    #[test]
    fn equality_is_inclusive() {
        let e = array![[0.5, 0.5, 0.5], [0.2, 0.2, 0.2]];
        let d = build_decision_table(e.view(), &three_clusters(), 0.0, 0.0).unwrap();
        assert!(d.0.iter().all(|&v| v == 1));
    }

    #[test]
    fn whole_column_always_one() {
        let e = array![[0.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        let d = build_decision_table(e.view(), &three_clusters(), 5.0, 0.0).unwrap();
        assert!(d.whole_column_all_ones());
        assert_eq!(d.partial_counts(), vec![0, 0]);
    }

    #[test]
    fn dimension_mismatch() {
        let e = array![[0.0, 0.0], [1.0, 1.0]];
        assert!(build_decision_table(e.view(), &three_clusters(), 0.4, 0.5).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(IceParams::default().validate().is_ok());
        assert!(IceParams {
            clusters: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(IceParams {
            w: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(IceParams {
            neighbors: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(IceParams {
            cv_folds: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(IceParams {
            beta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn decision_rows_round_trip() {
        let d = DecisionTable(array![[1u8, 0, 1], [0, 1, 1]]);
        assert_eq!(DecisionTable::from_rows(&d.to_rows()).unwrap(), d);
        assert!(DecisionTable::from_rows(&[vec![1, 2]]).is_err());
        assert!(DecisionTable::from_rows(&[vec![1, 0], vec![1]]).is_err());
    }
}
