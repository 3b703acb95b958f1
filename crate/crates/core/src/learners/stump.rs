//! Depth-one decision trees.

use ndarray::ArrayView2;

use super::{fit_constant, TrainedModel};
use crate::error::Result;

/// Stump outputs are `STUMP_EPS` or `1 - STUMP_EPS`.
pub const STUMP_EPS: f64 = 0.01;

/// Exhaustive search over features and midpoints between distinct sorted
/// values, minimizing weighted misclassification. Ties keep the lower
/// feature, then the lower threshold. Inputs that cannot be split fall back
/// to a smoothed majority vote.
pub fn fit_stump(x: ArrayView2<f64>, y: &[u8], weights: Option<&[f64]>) -> Result<TrainedModel> {
    let n = y.len();
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let total_pos: f64 = (0..n).filter(|&i| y[i] == 1).map(|i| w[i]).sum();
    let total_neg: f64 = (0..n).filter(|&i| y[i] == 0).map(|i| w[i]).sum();
    let slack = 1e-12 * (total_pos + total_neg);

    let mut best: Option<(f64, usize, f64, i8)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..x.ncols() {
        let col = x.column(f);
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let (mut pos_left, mut neg_left) = (0.0, 0.0);
        for k in 0..n.saturating_sub(1) {
            let i = order[k];
            if y[i] == 1 {
                pos_left += w[i];
            } else {
                neg_left += w[i];
            }
            let (lo, hi) = (col[i], col[order[k + 1]]);
            if lo == hi {
                continue;
            }
            let threshold = lo + (hi - lo) / 2.0;
            // polarity +1 predicts class 1 above the threshold
            let err_up = pos_left + (total_neg - neg_left);
            let err_down = neg_left + (total_pos - pos_left);
            for (err, polarity) in [(err_up, 1i8), (err_down, -1i8)] {
                if best.is_none_or(|(e, ..)| err < e - slack) {
                    best = Some((err, f, threshold, polarity));
                }
            }
        }
    }

    let majority_err = total_pos.min(total_neg);
    match best {
        Some((err, feature, threshold, polarity)) if err <= majority_err + slack => {
            Ok(TrainedModel::Stump {
                feature,
                threshold,
                polarity,
            })
        }
        _ => {
            let label = u8::from(total_pos >= total_neg);
            fit_constant(&[label], None)
        }
    }
}
