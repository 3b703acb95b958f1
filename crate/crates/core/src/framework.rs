//! Public entry points: fit, predict, re-sweep, persistence and inspection.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::association::{build_decision_table, train_ice, DecisionTable, IceModel, IceParams};
use crate::data::{Dataset, NominalMode, Scaler};
use crate::error::{IceError, Result};
use crate::evaluation::{consistency_score, Method, Normalization};
use crate::graphcluster::ClusterSet;
use crate::inference::predict_normalized;
use crate::learners::{Classifier, TrainedModel};

pub use crate::inference::predict_instance;

/// Version written to `manifest.json`.
pub const FORMAT_VERSION: u32 = 1;

/// Average unique models per prediction reported in the original
/// experiments; echoed next to our own measurement for comparison.
pub const REFERENCE_MEAN_MODELS: f64 = 45.0;

/// Everything a run needs, echoed into report metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: Vec<PathBuf>,
    pub label_column: String,
    pub method: Option<Method>,
    pub params: IceParams,
    pub normalization: Normalization,
    pub nominal: NominalMode,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Normalize with statistics of `dataset`, cluster, and train.
pub fn fit(dataset: &Dataset, params: &IceParams, base: &dyn Classifier) -> Result<IceModel> {
    train_ice(dataset, params, base)
}

/// Rebuild the decision table for new advantage scores from the stored
/// error table. Clusters, pool and everything else are left untouched.
pub fn resweep_decision(model: &IceModel, w: f64, s: f64) -> Result<IceModel> {
    let errors = model.raw_errors.as_ref().ok_or_else(|| {
        IceError::ModelFormat("model carries no raw error table; retrain to re-sweep".into())
    })?;
    let params = IceParams {
        w,
        s,
        ..model.params.clone()
    };
    params.validate()?;
    let decision = build_decision_table(errors.view(), &model.clusters, w, s)?;
    Ok(IceModel {
        decision,
        params,
        ..model.clone()
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    params: IceParams,
    scaler: Scaler,
    clusters: ClusterSet,
    models: Vec<String>,
    decision: Vec<Vec<u8>>,
    #[serde(default)]
    raw_errors: Option<Vec<Vec<f64>>>,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<u8>,
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(IceError::ModelFormat(format!("ragged {what} matrix")));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.concat())
        .map_err(|e| IceError::ModelFormat(e.to_string()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| IceError::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| IceError::io(path, e))
}

/// Write `model` into directory `dir`: `manifest.json` plus one
/// `model_NNN.json` per pool entry.
pub fn save(model: &IceModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| IceError::io(dir, e))?;
    let mut names = Vec::with_capacity(model.pool.len());
    for (j, m) in model.pool.iter().enumerate() {
        let name = format!("model_{j:03}.json");
        write(&dir.join(&name), &m.to_json()?)?;
        names.push(name);
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        params: model.params.clone(),
        scaler: model.scaler.clone(),
        clusters: model.clusters.clone(),
        models: names,
        decision: model.decision.to_rows(),
        raw_errors: model.raw_errors.as_ref().map(to_rows),
        train_x: to_rows(&model.train_x),
        train_y: model.train_y.clone(),
    };
    write(
        &dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )
}

/// Read a model written by [`save`].
pub fn load(dir: &Path) -> Result<IceModel> {
    let manifest: Manifest = serde_json::from_str(&read(&dir.join("manifest.json"))?)?;
    if manifest.format_version > FORMAT_VERSION {
        return Err(IceError::ModelFormat(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    let pool = manifest
        .models
        .iter()
        .map(|name| TrainedModel::from_json(&read(&dir.join(name))?))
        .collect::<Result<Vec<_>>>()?;
    let train_x = from_rows(&manifest.train_x, "training")?;
    let decision = DecisionTable::from_rows(&manifest.decision)?;
    let raw_errors = manifest
        .raw_errors
        .as_deref()
        .map(|r| from_rows(r, "error"))
        .transpose()?;
    let q = manifest.train_y.len();
    let l = pool.len();
    let consistent = train_x.nrows() == q
        && manifest.clusters.n == q
        && manifest.clusters.len() == l
        && decision.n_instances() == q
        && decision.n_models() == l
        && manifest.scaler.dim() == train_x.ncols()
        && raw_errors.as_ref().is_none_or(|e| e.dim() == (q, l));
    if !consistent || l == 0 {
        return Err(IceError::ModelFormat("manifest shapes disagree".into()));
    }
    Ok(IceModel {
        train_x,
        train_y: manifest.train_y,
        clusters: manifest.clusters,
        pool,
        decision,
        raw_errors,
        params: manifest.params,
        scaler: manifest.scaler,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

/// Structural summary of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub instances: usize,
    pub models: usize,
    pub requested_models: usize,
    pub cluster_sizes: Vec<usize>,
    pub partial_cluster_size: SizeSummary,
    /// Fraction of ones per decision-table column; the last is the whole model.
    pub column_density: Vec<f64>,
    /// Number of training instances per count of associated partial models.
    pub association_histogram: BTreeMap<usize, usize>,
    pub mean_associated_models: f64,
    pub consistency: f64,
    /// Unique partial models per prediction, using each training row as a probe.
    pub mean_models_per_prediction: f64,
    pub reference_mean_models: f64,
}

pub fn inspect(model: &IceModel) -> Result<InspectionReport> {
    let sizes = model.clusters.sizes();
    let partial = &sizes[..sizes.len() - 1];
    let counts = model.decision.partial_counts();
    let mut histogram = BTreeMap::new();
    for &c in &counts {
        *histogram.entry(c).or_insert(0) += 1;
    }
    let q = model.train_y.len();
    let mut unique = 0usize;
    for row in model.train_x.rows() {
        unique += predict_normalized(model, row)?.unique_models();
    }
    Ok(InspectionReport {
        instances: q,
        models: model.n_models(),
        requested_models: model.clusters.requested_l,
        cluster_sizes: sizes.clone(),
        partial_cluster_size: SizeSummary {
            min: partial.iter().copied().min().unwrap_or(0),
            mean: partial.iter().sum::<usize>() as f64 / partial.len().max(1) as f64,
            max: partial.iter().copied().max().unwrap_or(0),
        },
        column_density: model.decision.column_density(),
        association_histogram: histogram,
        mean_associated_models: counts.iter().sum::<usize>() as f64 / q as f64,
        consistency: consistency_score(model.train_x.view(), &model.decision),
        mean_models_per_prediction: unique as f64 / q as f64,
        reference_mean_models: REFERENCE_MEAN_MODELS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::BaseLearner;

    fn toy() -> Dataset {
        let mut x = Array2::zeros((40, 2));
        let mut y = Vec::new();
        for i in 0..40 {
            x[[i, 0]] = (i as f64 * 0.37).sin() * 3.0;
            x[[i, 1]] = (i as f64 * 0.91).cos() * 2.0;
            y.push(u8::from(x[[i, 0]] + 0.5 * x[[i, 1]] > 0.2));
        }
        Dataset::new(x, y).unwrap()
    }

    fn small_params() -> IceParams {
        IceParams {
            clusters: 6,
            cv_folds: 3,
            ..IceParams::default()
        }
    }

    #[test]
    fn save_load_round_trip() {
        let model = fit(&toy(), &small_params(), &BaseLearner::logistic()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(&model, dir.path()).unwrap();
        let back = load(dir.path()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn resweep_same_params_is_identity() {
        let model = fit(&toy(), &small_params(), &BaseLearner::logistic()).unwrap();
        let again = resweep_decision(&model, model.params.w, model.params.s).unwrap();
        assert_eq!(again, model);
        let mut bare = model.clone();
        bare.raw_errors = None;
        assert!(resweep_decision(&bare, 0.1, 0.1).is_err());
    }

    #[test]
    fn inspection_invariants() {
        let model = fit(&toy(), &small_params(), &BaseLearner::logistic()).unwrap();
        let rep = inspect(&model).unwrap();
        assert_eq!(*rep.column_density.last().unwrap(), 1.0);
        assert_eq!(rep.association_histogram.values().sum::<usize>(), 40);
        assert!(rep.consistency.abs() <= 1.0);
        assert!(rep.mean_models_per_prediction <= (rep.models - 1) as f64);
    }
}
