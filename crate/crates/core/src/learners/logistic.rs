//! L2-regularized logistic regression fitted by damped Newton steps.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;

use super::TrainedModel;
use crate::data::has_both_classes;
use crate::error::{IceError, Result};

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^eta) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

/// Weighted negative log-likelihood plus `lambda/2 * |coef|^2` and its
/// gradient. `theta[0]` is the unregularized intercept.
pub fn logistic_objective(
    theta: &[f64],
    x: ArrayView2<f64>,
    y: &[u8],
    weights: Option<&[f64]>,
    lambda: f64,
) -> (f64, Vec<f64>) {
    let r = x.ncols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; r + 1];
    for (i, row) in x.rows().into_iter().enumerate() {
        let wi = weights.map_or(1.0, |w| w[i]);
        let eta = theta[0] + row.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>();
        let yi = f64::from(y[i]);
        loss += wi * (softplus(eta) - yi * eta);
        let resid = wi * (sigmoid(eta) - yi);
        grad[0] += resid;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += resid * v;
        }
    }
    for (g, c) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += lambda * c;
    }
    loss += 0.5 * lambda * theta[1..].iter().map(|c| c * c).sum::<f64>();
    (loss, grad)
}

/// Fit from a zero start. Both classes must carry positive weight.
pub fn fit_logistic(
    x: ArrayView2<f64>,
    y: &[u8],
    weights: Option<&[f64]>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<TrainedModel> {
    if lambda < 0.0 {
        return Err(IceError::InvalidParameter(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let positive: Vec<u8> = match weights {
        Some(w) => y
            .iter()
            .zip(w)
            .filter(|(_, &wi)| wi > 0.0)
            .map(|(&yi, _)| yi)
            .collect(),
        None => y.to_vec(),
    };
    if !has_both_classes(&positive) {
        return Err(IceError::SingleClass(
            "logistic regression needs both classes".into(),
        ));
    }

    let (n, r) = x.dim();
    let dim = r + 1;
    let mut theta = vec![0.0; dim];
    let (mut loss, mut grad) = logistic_objective(&theta, x, y, weights, lambda);

    for _ in 0..max_iter {
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut feat = vec![0.0; dim];
        feat[0] = 1.0;
        for i in 0..n {
            let row = x.row(i);
            for (f, v) in feat[1..].iter_mut().zip(row) {
                *f = *v;
            }
            let eta: f64 = theta.iter().zip(&feat).map(|(a, b)| a * b).sum();
            let p = sigmoid(eta);
            let s = weights.map_or(1.0, |w| w[i]) * p * (1.0 - p);
            if s == 0.0 {
                continue;
            }
            for a in 0..dim {
                let sa = s * feat[a];
                for b in a..dim {
                    hess[(a, b)] += sa * feat[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
            hess[(a, a)] += if a == 0 { 1e-10 } else { lambda + 1e-10 };
        }
        let g = DVector::from_column_slice(&grad);
        let step = match hess.clone().cholesky() {
            Some(chol) => chol.solve(&g),
            None => hess.lu().solve(&g).unwrap_or_else(|| g.clone()),
        };

        // backtracking keeps every accepted step a descent step
        let mut scale = 1.0;
        let mut accepted = None;
        while scale > 1e-10 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, d)| t - scale * d)
                .collect();
            let (cl, cg) = logistic_objective(&cand, x, y, weights, lambda);
            if cl <= loss {
                accepted = Some((cand, cl, cg));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, cl, cg)) = accepted else {
            break;
        };
        let moved = theta
            .iter()
            .zip(&cand)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = cand;
        loss = cl;
        grad = cg;
        if moved < tol {
            break;
        }
    }

    Ok(TrainedModel::Logistic {
        intercept: theta[0],
        coef: theta[1..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn separable_slope_has_right_sign() {
        let x = array![[-1.0], [-2.0], [1.0], [2.0]];
        let m = fit_logistic(x.view(), &[0, 0, 1, 1], None, 1.0, 100, 1e-10).unwrap();
        assert!(m.predict_proba(array![2.0].view()) > 0.5);
        assert!(m.predict_proba(array![-2.0].view()) < 0.5);
    }

    #[test]
    fn zero_features_give_prior() {
        let x = Array2::zeros((4, 2));
        let m = fit_logistic(x.view(), &[1, 1, 1, 0], None, 1.0, 100, 1e-12).unwrap();
        assert!((m.predict_proba(array![3.0, -1.0].view()) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn heavy_penalty_shrinks_to_prior() {
        let x = array![[-1.5], [-0.5], [0.5], [1.5]];
        let m = fit_logistic(x.view(), &[0, 1, 0, 1], None, 1e9, 100, 1e-12).unwrap();
        let TrainedModel::Logistic { coef, .. } = &m else {
            panic!()
        };
        assert!(coef[0].abs() < 1e-8);
        assert!((m.predict_proba(array![10.0].view()) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn extreme_inputs_stay_in_range() {
        let x = array![[-1.0], [-2.0], [1.0], [2.0]];
        let m = fit_logistic(x.view(), &[0, 0, 1, 1], None, 0.01, 100, 1e-10).unwrap();
        for v in [-1e300, -1e6, 1e6, 1e300] {
            let p = m.predict_proba(array![v].view());
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn zero_weight_class_is_single_class() {
        let x = array![[0.0], [1.0]];
        assert!(fit_logistic(x.view(), &[0, 1], Some(&[1.0, 0.0]), 1.0, 10, 1e-8).is_err());
    }
}
