//! Bagging and discrete AdaBoost over any [`Classifier`].

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::{fit_constant, fit_or_constant, BoostedMember, Classifier, TrainedModel};
use crate::error::{IceError, Result};
use crate::seed::{self, sub_seed};

/// Weight given to a member with zero weighted training error.
pub const ALPHA_CAP: f64 = 2.0;

/// Bootstrap aggregation. Members average their probabilities.
pub fn fit_bagging(
    x: ArrayView2<f64>,
    y: &[u8],
    weights: Option<&[f64]>,
    base: &dyn Classifier,
    n_bags: usize,
    seed: u64,
) -> Result<TrainedModel> {
    if n_bags == 0 {
        return Err(IceError::InvalidParameter(
            "bagging needs at least one bag".into(),
        ));
    }
    let n = y.len();
    let mut members = Vec::with_capacity(n_bags);
    for b in 0..n_bags {
        let mut rng = seed::rng(sub_seed(seed, seed::stream::BAGS, b as u64));
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let bx: Array2<f64> = x.select(Axis(0), &idx);
        let by: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
        let bw: Option<Vec<f64>> = weights.map(|w| idx.iter().map(|&i| w[i]).collect());
        members.push(fit_or_constant(
            base,
            bx.view(),
            &by,
            bw.as_deref(),
            sub_seed(seed, seed::stream::POOL, b as u64),
        )?);
    }
    Ok(TrainedModel::Bagging { members })
}

/// Discrete AdaBoost on members thresholded at 0.5.
///
/// Stops when a round's weighted error reaches 0.5 (that member is
/// discarded) or hits zero (that member is kept with [`ALPHA_CAP`]). With no
/// usable member the weighted class prior is returned.
pub fn fit_adaboost(
    x: ArrayView2<f64>,
    y: &[u8],
    weights: Option<&[f64]>,
    base: &dyn Classifier,
    n_rounds: usize,
    seed: u64,
) -> Result<TrainedModel> {
    if n_rounds == 0 {
        return Err(IceError::InvalidParameter(
            "adaboost needs at least one round".into(),
        ));
    }
    let n = y.len();
    let mut w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(IceError::InvalidParameter(
            "instance weights sum to zero".into(),
        ));
    }
    w.iter_mut().for_each(|v| *v /= total);

    let sign = |yi: u8| if yi == 1 { 1.0 } else { -1.0 };
    let mut members = Vec::new();
    for t in 0..n_rounds {
        let model = fit_or_constant(
            base,
            x,
            y,
            Some(&w),
            sub_seed(seed, seed::stream::POOL, t as u64),
        )?;
        let hard: Vec<f64> = x
            .rows()
            .into_iter()
            .map(|r| {
                if model.predict_proba(r) >= 0.5 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let err: f64 = (0..n)
            .filter(|&i| hard[i] != sign(y[i]))
            .map(|i| w[i])
            .sum();
        if err >= 0.5 {
            break;
        }
        if err <= 0.0 {
            members.push(BoostedMember {
                alpha: ALPHA_CAP,
                model,
            });
            break;
        }
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        for i in 0..n {
            w[i] *= (-alpha * sign(y[i]) * hard[i]).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
        members.push(BoostedMember { alpha, model });
    }

    if members.is_empty() {
        return fit_constant(y, weights);
    }
    Ok(TrainedModel::AdaBoost { members })
}
