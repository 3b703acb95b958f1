//! Evaluation harness: AUC, paired cross-validation, randomized ablations,
//! the k-means subdomain experiment, advantage-score sweeps and the
//! consistency score.

mod ablation;
mod auc;
mod consistency;
mod cv;
mod evidence;
mod kmeans;
mod sweep;

pub use ablation::{ablate, ablate_many, AblationFlags};
pub use auc::auc;
pub use consistency::consistency_score;
pub use cv::{
    cross_validate, cross_validate_records, Aggregate, EvalConfig, EvalReport, EvalRow, Method,
    MethodSummary, Normalization, Record,
};
pub use evidence::{
    subdomain_evidence, EvidenceReport, EVIDENCE_FOLDS, EVIDENCE_KMEANS_RESTARTS,
    EVIDENCE_MIN_CLUSTER, EVIDENCE_REPEATS,
};
pub use kmeans::{kmeans, kmeans_restarts, KMeans};
pub use sweep::{sweep, SweepRow};
