use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IceError, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

fn sq_dist(a: ArrayView1<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Move the point farthest from its centroid into each empty cluster.
fn repair_empty(x: ArrayView2<f64>, assignment: &mut [usize], centroids: &mut [Vec<f64>]) {
    for c in 0..centroids.len() {
        if assignment.contains(&c) {
            continue;
        }
        let mut far = 0;
        let mut far_d = -1.0;
        for (i, &a) in assignment.iter().enumerate() {
            let d = sq_dist(x.row(i), &centroids[a]);
            let shared = assignment.iter().filter(|&&b| b == a).count() > 1;
            if shared && d > far_d {
                far = i;
                far_d = d;
            }
        }
        assignment[far] = c;
        centroids[c] = x.row(far).to_vec();
    }
}

/// Lloyd iterations from a seeded k-means++ start. Ties go to the lower
/// centroid index; a centroid that loses all its points is moved to the
/// point farthest from its own centroid.
pub fn kmeans(x: ArrayView2<f64>, k: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    let q = x.nrows();
    if k == 0 || k > q {
        return Err(IceError::InvalidParameter(format!(
            "k = {k} must lie in [1, {q}]"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut centroids: Vec<Vec<f64>> = vec![x.row(rng.random_range(0..q)).to_vec()];
    let mut nearest: Vec<f64> = (0..q).map(|i| sq_dist(x.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = q - 1;
            for (i, d) in nearest.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..q)
        };
        let c = x.row(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), &c));
        }
        centroids.push(c);
    }

    let assign = |centroids: &[Vec<f64>], i: usize| -> usize {
        let row = x.row(i);
        let mut best = 0;
        let mut best_d = sq_dist(row, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = sq_dist(row, centroid);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        best
    };

    let mut assignment: Vec<usize> = (0..q).map(|i| assign(&centroids, i)).collect();
    repair_empty(x, &mut assignment, &mut centroids);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros((k, x.ncols()));
        let mut counts = vec![0usize; k];
        for i in 0..q {
            counts[assignment[i]] += 1;
            let mut s = sums.row_mut(assignment[i]);
            s += &x.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums.row(c).iter().map(|v| v / counts[c] as f64).collect();
            }
        }
        let mut next: Vec<usize> = (0..q).map(|i| assign(&centroids, i)).collect();
        repair_empty(x, &mut next, &mut centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    let inertia = (0..q)
        .map(|i| sq_dist(x.row(i), &centroids[assignment[i]]))
        .sum();
    Ok(KMeans {
        assignment,
        centroids,
        iterations,
        inertia,
    })
}

/// Best of `restarts` independent runs by inertia; the first wins ties.
/// Run `r` uses seed `sub_seed(seed, r, 0)`.
pub fn kmeans_restarts(
    x: ArrayView2<f64>,
    k: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<KMeans> {
    let mut best: Option<KMeans> = None;
    for r in 0..restarts.max(1) {
        let km = kmeans(x, k, seed::sub_seed(seed, r as u64, 0), max_iter)?;
        if best.as_ref().is_none_or(|b| km.inertia < b.inertia) {
            best = Some(km);
        }
    }
    Ok(best.expect("at least one run"))
}
