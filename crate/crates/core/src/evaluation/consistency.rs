use ndarray::ArrayView2;

use crate::association::DecisionTable;

/// Pearson correlation between two views of instance similarity over all
/// pairs `i < j`: negative Euclidean distance in feature space, and the
/// fraction of agreeing decision-table entries. Returns 0 when either side
/// has no variance or fewer than three instances are given.
pub fn consistency_score(x: ArrayView2<f64>, decision: &DecisionTable) -> f64 {
    let q = x.nrows().min(decision.n_instances());
    if q < 3 {
        return 0.0;
    }
    let l = decision.n_models() as f64;
    let mut feat = Vec::with_capacity(q * (q - 1) / 2);
    let mut dec = Vec::with_capacity(q * (q - 1) / 2);
    for i in 0..q {
        for j in (i + 1)..q {
            let d2: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            feat.push(-d2.sqrt());
            let same = decision
                .0
                .row(i)
                .iter()
                .zip(decision.0.row(j))
                .filter(|(a, b)| a == b)
                .count();
            dec.push(same as f64 / l);
        }
    }
    pearson(&feat, &dec)
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}
