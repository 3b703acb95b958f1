//! Individualized classifier ensembles.
//!
//! Training groups instances into overlapping clusters (random walk with
//! restart over a KNN graph), fits one submodel per cluster plus a model on
//! the whole training set, and associates every training instance with the
//! submodels that predict it well under cross-validation. At prediction time
//! the nearest training instances vote in their associated submodels, which
//! are blended with the whole model.
//!
//! The crate also carries the evaluation harness used to study the method:
//! cross-validated AUC against bagging/boosting baselines, randomized
//! component ablations, a k-means subdomain experiment and a
//! feature/decision-table consistency score.

pub mod association;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod framework;
pub mod graphcluster;
pub mod inference;
pub mod learners;
mod seed;

pub use association::{
    build_decision_table, build_prediction_matrix, train_ice, train_ice_with_scaler,
    train_on_clusters, DecisionArtifacts, DecisionTable, IceModel, IceParams,
};
pub use data::{
    encode_nominal, load_csv, read_csv, read_records, stratified_folds, zscore_fit_apply,
    ColumnKind, Dataset, FeatureColumn, FeatureSchema, FoldAssignment, NominalMode, RawTable,
    Scaler,
};
pub use error::{IceError, Result};
pub use evaluation::{
    ablate, ablate_many, auc, consistency_score, cross_validate, cross_validate_records, kmeans,
    kmeans_restarts, subdomain_evidence, sweep, AblationFlags, Aggregate, EvalConfig, EvalReport,
    EvalRow, EvidenceReport, Method, MethodSummary, Normalization, SweepRow,
};
pub use framework::{
    fit, inspect, load, predict_instance, resweep_decision, save, InspectionReport, RunConfig,
};
pub use graphcluster::{
    cut_clusters, fuzzy_cluster, knn_graph, rwr_affinity, select_centers, AffinityArtifacts,
    ClusterOptions, ClusterSet,
};
pub use inference::{collect_models, combine, find_neighbors, Combination, PredictionContext};
pub use learners::{BaseLearner, Classifier, TrainedModel};
