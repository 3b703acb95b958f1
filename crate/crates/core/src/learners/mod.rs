//! Base classifiers used to build the submodel pool and the baselines.
//!
//! Every learner accepts optional instance weights and a seed, and produces
//! an immutable [`TrainedModel`] that serializes to JSON and predicts the
//! probability of class 1.

mod ensemble;
mod logistic;
mod stump;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::has_both_classes;
use crate::error::{IceError, Result};

pub use ensemble::{fit_adaboost, fit_bagging, ALPHA_CAP};
pub use logistic::{fit_logistic, logistic_objective, sigmoid};
pub use stump::{fit_stump, STUMP_EPS};

/// Anything that can be fitted to weighted binary data.
pub trait Classifier: Send + Sync {
    fn fit(
        &self,
        x: ArrayView2<f64>,
        y: &[u8],
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<TrainedModel>;
}

/// Built-in learner configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseLearner {
    Logistic {
        lambda: f64,
        max_iter: usize,
        tol: f64,
    },
    Stump,
    Bagging {
        base: Box<BaseLearner>,
        n_bags: usize,
    },
    AdaBoost {
        base: Box<BaseLearner>,
        n_rounds: usize,
    },
}

impl BaseLearner {
    pub fn logistic() -> Self {
        BaseLearner::Logistic {
            lambda: 1.0,
            max_iter: 100,
            tol: 1e-8,
        }
    }

    pub fn bagging(base: BaseLearner, n_bags: usize) -> Self {
        BaseLearner::Bagging {
            base: Box::new(base),
            n_bags,
        }
    }

    pub fn adaboost(base: BaseLearner, n_rounds: usize) -> Self {
        BaseLearner::AdaBoost {
            base: Box::new(base),
            n_rounds,
        }
    }
}

impl Default for BaseLearner {
    fn default() -> Self {
        BaseLearner::logistic()
    }
}

impl Classifier for BaseLearner {
    fn fit(
        &self,
        x: ArrayView2<f64>,
        y: &[u8],
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<TrainedModel> {
        check_shapes(x, y, weights)?;
        match self {
            BaseLearner::Logistic {
                lambda,
                max_iter,
                tol,
            } => fit_logistic(x, y, weights, *lambda, *max_iter, *tol),
            BaseLearner::Stump => fit_stump(x, y, weights),
            BaseLearner::Bagging { base, n_bags } => {
                fit_bagging(x, y, weights, base.as_ref(), *n_bags, seed)
            }
            BaseLearner::AdaBoost { base, n_rounds } => {
                fit_adaboost(x, y, weights, base.as_ref(), *n_rounds, seed)
            }
        }
    }
}

pub(crate) fn check_shapes(x: ArrayView2<f64>, y: &[u8], weights: Option<&[f64]>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(IceError::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(IceError::DimensionMismatch {
                expected: y.len(),
                found: w.len(),
            });
        }
    }
    if y.is_empty() {
        return Err(IceError::EmptyTable);
    }
    Ok(())
}

/// Fit `learner`, or the class prior when the data holds a single class.
pub fn fit_or_constant(
    learner: &dyn Classifier,
    x: ArrayView2<f64>,
    y: &[u8],
    weights: Option<&[f64]>,
    seed: u64,
) -> Result<TrainedModel> {
    if has_both_classes(y) {
        learner.fit(x, y, weights, seed)
    } else {
        fit_constant(y, weights)
    }
}

/// Weighted positive-class frequency clipped to `[0.01, 0.99]`.
pub fn fit_constant(y: &[u8], weights: Option<&[f64]>) -> Result<TrainedModel> {
    if y.is_empty() {
        return Err(IceError::EmptyTable);
    }
    let (pos, total) = match weights {
        Some(w) => y.iter().zip(w).fold((0.0, 0.0), |(p, t), (&yi, &wi)| {
            (p + wi * f64::from(yi), t + wi)
        }),
        None => (y.iter().map(|&v| f64::from(v)).sum(), y.len() as f64),
    };
    let p = if total > 0.0 { pos / total } else { 0.5 };
    Ok(TrainedModel::Constant {
        p: p.clamp(0.01, 0.99),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedMember {
    pub alpha: f64,
    pub model: TrainedModel,
}

/// A fitted classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Logistic {
        coef: Vec<f64>,
        intercept: f64,
    },
    Stump {
        feature: usize,
        threshold: f64,
        polarity: i8,
    },
    Bagging {
        members: Vec<TrainedModel>,
    },
    AdaBoost {
        members: Vec<BoostedMember>,
    },
    Constant {
        p: f64,
    },
}

impl TrainedModel {
    /// Probability of class 1 for one feature vector.
    pub fn predict_proba(&self, x: ArrayView1<f64>) -> f64 {
        match self {
            TrainedModel::Logistic { coef, intercept } => {
                let eta = intercept + coef.iter().zip(x.iter()).map(|(c, v)| c * v).sum::<f64>();
                sigmoid(eta)
            }
            TrainedModel::Stump {
                feature,
                threshold,
                polarity,
            } => {
                let above = x[*feature] > *threshold;
                if above == (*polarity > 0) {
                    1.0 - STUMP_EPS
                } else {
                    STUMP_EPS
                }
            }
            TrainedModel::Bagging { members } => {
                members.iter().map(|m| m.predict_proba(x)).sum::<f64>() / members.len() as f64
            }
            TrainedModel::AdaBoost { members } => {
                let margin: f64 = members
                    .iter()
                    .map(|m| {
                        m.alpha
                            * if m.model.predict_proba(x) >= 0.5 {
                                1.0
                            } else {
                                -1.0
                            }
                    })
                    .sum();
                sigmoid(2.0 * margin)
            }
            TrainedModel::Constant { p } => *p,
        }
    }

    pub fn predict_many(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_proba(r))
            .collect()
    }

    /// Number of fitted members (1 for single models).
    pub fn member_count(&self) -> usize {
        match self {
            TrainedModel::Bagging { members } => members.len(),
            TrainedModel::AdaBoost { members } => members.len(),
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| IceError::ModelFormat(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn constant_examples() {
        let one = array![0.0];
        let p = |m: TrainedModel| m.predict_proba(one.view());
        assert_eq!(p(fit_constant(&[1, 1, 1, 0], None).unwrap()), 0.75);
        assert_eq!(p(fit_constant(&[1, 1], None).unwrap()), 0.99);
        assert_eq!(p(fit_constant(&[0], None).unwrap()), 0.01);
        assert_eq!(p(fit_constant(&[1, 0], Some(&[3.0, 1.0])).unwrap()), 0.75);
        assert!(fit_constant(&[], None).is_err());
    }

    #[test]
    fn single_class_falls_back_to_constant() {
        let x = Array2::zeros((3, 2));
        let m = fit_or_constant(&BaseLearner::logistic(), x.view(), &[1, 1, 1], None, 0).unwrap();
        assert_eq!(m, TrainedModel::Constant { p: 0.99 });
        assert!(BaseLearner::logistic()
            .fit(x.view(), &[1, 1, 1], None, 0)
            .is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = Array2::zeros((3, 2));
        assert!(BaseLearner::Stump.fit(x.view(), &[1, 0], None, 0).is_err());
        assert!(BaseLearner::Stump
            .fit(x.view(), &[1, 0, 1], Some(&[1.0]), 0)
            .is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let x = array![
            [0.1, -1.3],
            [0.7, 0.2],
            [-0.4, 2.2],
            [1.9, -0.8],
            [0.3, 0.3],
            [-1.1, 0.9]
        ];
        let y = [0u8, 1, 0, 1, 1, 0];
        let learners = [
            BaseLearner::logistic(),
            BaseLearner::Stump,
            BaseLearner::bagging(BaseLearner::logistic(), 5),
            BaseLearner::adaboost(BaseLearner::Stump, 5),
        ];
        let probe = array![0.123456789, -0.987654321];
        for learner in &learners {
            let m = learner.fit(x.view(), &y, None, 3).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(m, back);
            assert_eq!(
                m.predict_proba(probe.view()).to_bits(),
                back.predict_proba(probe.view()).to_bits()
            );
        }
    }
}
