use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::auc::auc;
use crate::association::{train_ice_with_scaler, IceParams};
use crate::data::{stratified_folds, Dataset, FoldAssignment, Scaler};
use crate::error::{IceError, Result};
use crate::inference::predict_normalized;
use crate::learners::{fit_adaboost, fit_bagging, fit_or_constant, BaseLearner};
use crate::seed::{self, sub_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ice,
    Bagging,
    AdaBoost,
    Base,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ice => "ice",
            Method::Bagging => "bagging",
            Method::AdaBoost => "adaboost",
            Method::Base => "base",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = IceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ice" => Ok(Method::Ice),
            "bagging" => Ok(Method::Bagging),
            "adaboost" => Ok(Method::AdaBoost),
            "base" => Ok(Method::Base),
            other => Err(IceError::InvalidParameter(format!(
                "unknown method `{other}`"
            ))),
        }
    }
}

/// Where z-score statistics come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Training portion of each fold only.
    #[default]
    PerFold,
    /// Whole dataset before splitting.
    Global,
}

impl std::str::FromStr for Normalization {
    type Err = IceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-fold" | "fold" => Ok(Normalization::PerFold),
            "global" => Ok(Normalization::Global),
            other => Err(IceError::InvalidParameter(format!(
                "unknown normalization `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub ice: IceParams,
    pub base: BaseLearner,
    pub n_bags: usize,
    pub n_rounds: usize,
    pub folds: usize,
    pub normalization: Normalization,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ice: IceParams::default(),
            base: BaseLearner::logistic(),
            n_bags: 100,
            n_rounds: 100,
            folds: 10,
            normalization: Normalization::PerFold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub dataset: String,
    pub method: String,
    pub fold: usize,
    pub auc: f64,
    /// Distinct models consulted per test prediction, averaged.
    pub mean_models: f64,
    pub seconds: f64,
}

/// Test-set scores of one fold, kept for paired analyses.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub row: EvalRow,
    pub test_indices: Vec<usize>,
    pub scores: Vec<f64>,
}

pub(crate) struct FoldData {
    pub fold: usize,
    pub train: Dataset,
    pub test_idx: Vec<usize>,
    pub test_y: Vec<u8>,
    pub scaler: Scaler,
    pub train_x: Array2<f64>,
    pub test_x: Array2<f64>,
    pub seed: u64,
}

/// Shared fold construction so every method sees the same split.
pub(crate) fn folds_for(
    dataset: &Dataset,
    config: &EvalConfig,
    seed: u64,
) -> Result<(FoldAssignment, Vec<FoldData>)> {
    let assignment = stratified_folds(
        &dataset.y,
        config.folds,
        sub_seed(seed, seed::stream::OUTER_FOLD, 0),
    )?;
    let global = match config.normalization {
        Normalization::Global => Some(Scaler::fit(dataset.x.view())?),
        Normalization::PerFold => None,
    };
    let mut out = Vec::with_capacity(assignment.k);
    for fold in 0..assignment.k {
        let train_idx = assignment.train_indices(fold);
        let test_idx = assignment.test_indices(fold);
        let (tx, ty) = dataset.rows(&train_idx);
        let (vx, vy) = dataset.rows(&test_idx);
        let train = Dataset::new(tx, ty)?;
        let scaler = match &global {
            Some(s) => s.clone(),
            None => Scaler::fit(train.x.view())?,
        };
        let train_x = scaler.transform(train.x.view())?;
        let test_x = scaler.transform(vx.view())?;
        out.push(FoldData {
            fold,
            train,
            test_idx,
            test_y: vy,
            scaler,
            train_x,
            test_x,
            seed: sub_seed(seed, seed::stream::OUTER_FOLD, fold as u64 + 1),
        });
    }
    Ok((assignment, out))
}

/// Stratified k-fold AUC of one method. Fold assignment depends only on
/// the labels and `seed`, so methods evaluated with the same seed are
/// paired fold by fold.
pub fn cross_validate(
    dataset: &Dataset,
    dataset_id: &str,
    method: Method,
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    Ok(
        cross_validate_records(dataset, dataset_id, method, config, seed)?
            .into_iter()
            .map(|r| r.row)
            .collect(),
    )
}

/// Like [`cross_validate`] but keeps per-fold test scores.
pub fn cross_validate_records(
    dataset: &Dataset,
    dataset_id: &str,
    method: Method,
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<Record>> {
    let (_, folds) = folds_for(dataset, config, seed)?;
    folds
        .iter()
        .map(|fd| {
            let started = Instant::now();
            let (scores, mean_models) = score_fold(fd, method, config)?;
            let row = EvalRow {
                dataset: dataset_id.to_string(),
                method: method.to_string(),
                fold: fd.fold,
                auc: auc(&scores, &fd.test_y)?,
                mean_models,
                seconds: started.elapsed().as_secs_f64(),
            };
            Ok(Record {
                row,
                test_indices: fd.test_idx.clone(),
                scores,
            })
        })
        .collect()
}

fn score_fold(fd: &FoldData, method: Method, config: &EvalConfig) -> Result<(Vec<f64>, f64)> {
    let ty = &fd.train.y;
    match method {
        Method::Ice => {
            let params = IceParams {
                seed: fd.seed,
                ..config.ice.clone()
            };
            let model = train_ice_with_scaler(&fd.train, fd.scaler.clone(), &params, &config.base)?;
            let mut scores = Vec::with_capacity(fd.test_x.nrows());
            let mut unique = 0usize;
            for row in fd.test_x.rows() {
                let ctx = predict_normalized(&model, row)?;
                unique += ctx.unique_models();
                scores.push(ctx.final_prob);
            }
            let mean = unique as f64 / scores.len().max(1) as f64;
            Ok((scores, mean))
        }
        Method::Bagging => {
            let m = fit_bagging(
                fd.train_x.view(),
                ty,
                None,
                &config.base,
                config.n_bags,
                fd.seed,
            )?;
            Ok((m.predict_many(fd.test_x.view()), m.member_count() as f64))
        }
        Method::AdaBoost => {
            let m = fit_adaboost(
                fd.train_x.view(),
                ty,
                None,
                &config.base,
                config.n_rounds,
                fd.seed,
            )?;
            Ok((m.predict_many(fd.test_x.view()), m.member_count() as f64))
        }
        Method::Base => {
            let m = fit_or_constant(&config.base, fd.train_x.view(), ty, None, fd.seed)?;
            Ok((m.predict_many(fd.test_x.view()), 1.0))
        }
    }
}

/// Rows of one or more cross-validation runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean_auc: f64,
    pub mean_models: f64,
    pub datasets: usize,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub reference: String,
    /// Mean fold AUC per dataset and method.
    pub per_dataset: BTreeMap<String, BTreeMap<String, f64>>,
    pub methods: BTreeMap<String, MethodSummary>,
}

impl EvalReport {
    pub fn extend(&mut self, rows: impl IntoIterator<Item = EvalRow>) {
        self.rows.extend(rows);
    }

    /// Sort by dataset, method, then fold.
    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| (&a.dataset, &a.method, a.fold).cmp(&(&b.dataset, &b.method, b.fold)));
    }

    pub fn to_csv(&self, with_timings: bool) -> String {
        let mut out = String::from("dataset,method,fold,auc,mean_models,seconds\n");
        for r in &self.rows {
            let secs = if with_timings {
                format!("{:.3}", r.seconds)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{},{},{},{:.17},{:.17},{}",
                r.dataset, r.method, r.fold, r.auc, r.mean_models, secs
            );
        }
        out
    }

    /// Per-method means and win/tie/loss counts against `reference`,
    /// comparing mean fold AUC per dataset (ties within 1e-6).
    pub fn aggregate(&self, reference: &str) -> Aggregate {
        let mut sums: BTreeMap<(String, String), (f64, f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = sums
                .entry((r.dataset.clone(), r.method.clone()))
                .or_insert((0.0, 0.0, 0));
            e.0 += r.auc;
            e.1 += r.mean_models;
            e.2 += 1;
        }
        let mut per_dataset: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let mut models: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for ((d, m), (a, mm, n)) in &sums {
            per_dataset
                .entry(d.clone())
                .or_default()
                .insert(m.clone(), a / *n as f64);
            models.entry(m.clone()).or_default().push(mm / *n as f64);
        }
        let mut methods = BTreeMap::new();
        for (m, mm) in &models {
            let aucs: Vec<(f64, Option<f64>)> = per_dataset
                .values()
                .filter_map(|by| by.get(m).map(|a| (*a, by.get(reference).copied())))
                .collect();
            let (mut wins, mut ties, mut losses) = (0, 0, 0);
            for (a, r) in &aucs {
                if let Some(r) = r {
                    if (a - r).abs() <= 1e-6 {
                        ties += 1;
                    } else if a > r {
                        wins += 1;
                    } else {
                        losses += 1;
                    }
                }
            }
            methods.insert(
                m.clone(),
                MethodSummary {
                    mean_auc: aucs.iter().map(|(a, _)| a).sum::<f64>() / aucs.len() as f64,
                    mean_models: mm.iter().sum::<f64>() / mm.len() as f64,
                    datasets: aucs.len(),
                    wins,
                    ties,
                    losses,
                },
            );
        }
        Aggregate {
            reference: reference.to_string(),
            per_dataset,
            methods,
        }
    }
}
