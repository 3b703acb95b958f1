use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::cv::{folds_for, EvalConfig};
use crate::association::{train_ice_with_scaler, IceParams};
use crate::data::Dataset;
use crate::error::Result;
use crate::framework::resweep_decision;
use crate::inference::predict_normalized;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dataset: String,
    pub fold: usize,
    pub w: f64,
    pub s: f64,
    pub auc: f64,
    pub mean_models: f64,
}

/// Cross-validated AUC over a grid of advantage scores. Each fold trains
/// once; other `(w, s)` pairs only rebuild the decision table.
pub fn sweep(
    dataset: &Dataset,
    dataset_id: &str,
    grid: &[(f64, f64)],
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let (_, folds) = folds_for(dataset, config, seed)?;
    let mut rows = Vec::with_capacity(folds.len() * grid.len());
    for fd in &folds {
        let params = IceParams {
            seed: fd.seed,
            ..config.ice.clone()
        };
        let model = train_ice_with_scaler(&fd.train, fd.scaler.clone(), &params, &config.base)?;
        for &(w, s) in grid {
            let swept = resweep_decision(&model, w, s)?;
            let mut scores = Vec::with_capacity(fd.test_x.nrows());
            let mut unique = 0usize;
            for row in fd.test_x.rows() {
                let ctx = predict_normalized(&swept, row)?;
                unique += ctx.unique_models();
                scores.push(ctx.final_prob);
            }
            rows.push(SweepRow {
                dataset: dataset_id.to_string(),
                fold: fd.fold,
                w,
                s,
                auc: auc(&scores, &fd.test_y)?,
                mean_models: unique as f64 / scores.len() as f64,
            });
        }
    }
    Ok(rows)
}
