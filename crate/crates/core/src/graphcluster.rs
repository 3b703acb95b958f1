//! Overlapping clusters from random walks with restart on a KNN graph.
//!
//! The pipeline is `knn_graph` -> `rwr_affinity` -> `select_centers` ->
//! `cut_clusters`. Nothing in it is random: ties are always broken toward
//! the lower index, so identical inputs give identical clusters.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IceError, Result};

/// Overlapping clusters `c_1..c_L`. The last cluster is always every
/// instance; the others each contain their center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    /// Sorted member indices per cluster.
    pub clusters: Vec<Vec<usize>>,
    /// Center of each partial cluster (`clusters.len() - 1` entries).
    pub centers: Vec<usize>,
    /// Target average size of the partial clusters.
    pub z: f64,
    /// Cluster count asked for; larger than `len()` when capped by `Q`.
    pub requested_l: usize,
    /// Number of instances the clusters index into.
    pub n: usize,
}

impl ClusterSet {
    /// Build a cluster set from explicit partial clusters; the whole cluster
    /// is appended.
    pub fn from_partial(
        partials: Vec<Vec<usize>>,
        centers: Vec<usize>,
        z: f64,
        n: usize,
    ) -> Result<Self> {
        if partials.is_empty() {
            return Err(IceError::InvalidParameter(
                "need at least one partial cluster".into(),
            ));
        }
        let mut clusters = Vec::with_capacity(partials.len() + 1);
        for mut c in partials {
            c.sort_unstable();
            c.dedup();
            if c.is_empty() || c.last().is_some_and(|&i| i >= n) {
                return Err(IceError::InvalidParameter(
                    "cluster empty or out of range".into(),
                ));
            }
            clusters.push(c);
        }
        clusters.push((0..n).collect());
        let requested_l = clusters.len();
        Ok(ClusterSet {
            clusters,
            centers,
            z,
            requested_l,
            n,
        })
    }

    /// Total cluster count `L`, including the whole cluster.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn contains(&self, cluster: usize, instance: usize) -> bool {
        self.clusters[cluster].binary_search(&instance).is_ok()
    }

    /// `membership[j][i]` is true when instance `i` belongs to cluster `j`.
    pub fn membership(&self) -> Vec<Vec<bool>> {
        self.clusters
            .iter()
            .map(|c| {
                let mut m = vec![false; self.n];
                for &i in c {
                    m[i] = true;
                }
                m
            })
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }
}

/// Intermediate matrices of the clustering pipeline.
#[derive(Clone, Debug)]
pub struct AffinityArtifacts {
    pub distances: Array2<f64>,
    pub adjacency: Array2<u8>,
    pub affinity: Array2<f64>,
    pub centers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub restart_p: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Average partial-cluster size; `None` means `Q / 3`.
    pub z: Option<f64>,
    pub min_cluster_size: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            restart_p: 0.3,
            tol: 1e-8,
            max_iter: 200,
            z: None,
            min_cluster_size: 8,
        }
    }
}

/// `⌈log10 Q⌉`, at least 1 and at most `Q - 1`.
pub fn neighbor_count(q: usize) -> usize {
    let mut k = 0;
    let mut pow = 1usize;
    while pow < q {
        pow = pow.saturating_mul(10);
        k += 1;
    }
    k.max(1).min(q.saturating_sub(1))
}

pub fn pairwise_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let q = x.nrows();
    let mut s = Array2::zeros((q, q));
    for i in 0..q {
        for j in (i + 1)..q {
            let d = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            s[[i, j]] = d;
            s[[j, i]] = d;
        }
    }
    s
}

/// Euclidean distance matrix and the union-symmetrized KNN adjacency where
/// every node selects its `⌈log10 Q⌉` nearest other nodes.
pub fn knn_graph(x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<u8>)> {
    let q = x.nrows();
    if q < 2 {
        return Err(IceError::InvalidData(format!(
            "KNN graph needs at least 2 instances, got {q}"
        )));
    }
    let s = pairwise_distances(x);
    let k = neighbor_count(q);
    let mut g = Array2::zeros((q, q));
    let mut order: Vec<usize> = Vec::with_capacity(q);
    for i in 0..q {
        order.clear();
        order.extend((0..q).filter(|&j| j != i));
        order.sort_by(|&a, &b| s[[i, a]].total_cmp(&s[[i, b]]).then(a.cmp(&b)));
        for &j in &order[..k] {
            g[[i, j]] = 1;
            g[[j, i]] = 1;
        }
    }
    Ok((s, g))
}

/// Random walk with restart from every node. Row `i` of the result is the
/// stationary distribution of a walk on `adjacency` that jumps back to `i`
/// with probability `restart_p` at each step.
pub fn rwr_affinity(
    adjacency: ArrayView2<u8>,
    restart_p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    if !(restart_p > 0.0 && restart_p <= 1.0) {
        return Err(IceError::InvalidParameter(format!(
            "restart probability must lie in (0, 1], got {restart_p}"
        )));
    }
    let q = adjacency.nrows();
    if adjacency.ncols() != q {
        return Err(IceError::DimensionMismatch {
            expected: q,
            found: adjacency.ncols(),
        });
    }
    for i in 0..q {
        for j in (i + 1)..q {
            if (adjacency[[i, j]] != 0) != (adjacency[[j, i]] != 0) {
                return Err(IceError::InvalidParameter(format!(
                    "adjacency is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let neighbors: Vec<Vec<usize>> = (0..q)
        .map(|v| {
            let nb: Vec<usize> = (0..q).filter(|&u| adjacency[[v, u]] != 0).collect();
            // isolated node: self-loop keeps the walk stochastic
            if nb.is_empty() {
                vec![v]
            } else {
                nb
            }
        })
        .collect();
    let inv_degree: Vec<f64> = neighbors.iter().map(|nb| 1.0 / nb.len() as f64).collect();

    let rows: Vec<Vec<f64>> = (0..q)
        .into_par_iter()
        .map(|seed| walk_from(seed, &neighbors, &inv_degree, restart_p, tol, max_iter))
        .collect();
    let mut w = Array2::zeros((q, q));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            w[[i, j]] = v;
        }
    }
    Ok(w)
}

fn walk_from(
    seed: usize,
    neighbors: &[Vec<usize>],
    inv_degree: &[f64],
    restart_p: f64,
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let q = neighbors.len();
    let mut w = vec![0.0; q];
    w[seed] = 1.0;
    let mut share = vec![0.0; q];
    let mut next = vec![0.0; q];
    for _ in 0..max_iter {
        for u in 0..q {
            share[u] = w[u] * inv_degree[u];
        }
        let mut delta = 0.0f64;
        for v in 0..q {
            let inflow: f64 = neighbors[v].iter().map(|&u| share[u]).sum();
            let restart = if v == seed { restart_p } else { 0.0 };
            next[v] = (1.0 - restart_p) * inflow + restart;
            delta = delta.max((next[v] - w[v]).abs());
        }
        std::mem::swap(&mut w, &mut next);
        if delta < tol {
            break;
        }
    }
    w
}

/// Furthest-point center selection on an affinity matrix.
///
/// The first center has the largest column sum (incoming probability).
/// Each further center is the non-center node with the smallest summed
/// symmetric affinity `W[t, v] + W[v, t]` to the centers chosen so far.
pub fn select_centers(w: ArrayView2<f64>, m: usize) -> Result<Vec<usize>> {
    let q = w.nrows();
    if m == 0 || m > q {
        return Err(IceError::InvalidParameter(format!(
            "center count {m} must lie in [1, {q}]"
        )));
    }
    let incoming: Vec<f64> = w.columns().into_iter().map(|c| c.sum()).collect();
    let first = argbest(&incoming, |a, b| a.total_cmp(b));
    let mut centers = vec![first];
    let mut is_center = vec![false; q];
    is_center[first] = true;
    let mut closeness = vec![0.0; q];
    while centers.len() < m {
        let last = *centers.last().unwrap();
        for v in 0..q {
            closeness[v] += w[[last, v]] + w[[v, last]];
        }
        let next = (0..q)
            .filter(|&v| !is_center[v])
            .min_by(|&a, &b| closeness[a].total_cmp(&closeness[b]).then(a.cmp(&b)))
            .unwrap();
        is_center[next] = true;
        centers.push(next);
    }
    Ok(centers)
}

/// Index of the largest value; ties go to the lower index.
fn argbest(values: &[f64], cmp: impl Fn(&f64, &f64) -> Ordering) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if cmp(&values[i], &values[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Threshold the center rows of `w` so partial clusters average `z`
/// members besides their center.
///
/// The top `⌊m·z⌋` off-diagonal entries among the `m` center rows are kept
/// (ties: lower center position, then lower column). Cluster `j` is its
/// center plus the kept columns of its row, topped up by row affinity to
/// `min_size`. The whole cluster is appended last.
pub fn cut_clusters(
    w: ArrayView2<f64>,
    centers: &[usize],
    z: f64,
    min_size: usize,
) -> Result<ClusterSet> {
    let q = w.nrows();
    if centers.is_empty() {
        return Err(IceError::InvalidParameter("no cluster centers".into()));
    }
    if !(z >= 1.0 && z <= q as f64) {
        return Err(IceError::InvalidParameter(format!(
            "average cluster size {z} must lie in [1, {q}]"
        )));
    }
    let m = centers.len();
    let budget = ((m as f64 * z).floor() as usize).min(m * (q - 1));

    let mut entries: Vec<(usize, usize)> = Vec::with_capacity(m * (q - 1));
    for (j, &t) in centers.iter().enumerate() {
        entries.extend((0..q).filter(|&v| v != t).map(|v| (j, v)));
    }
    let value = |&(j, v): &(usize, usize)| w[[centers[j], v]];
    entries.sort_by(|a, b| value(b).total_cmp(&value(a)).then(a.cmp(b)));

    let mut kept = vec![0usize; m];
    for &(j, _) in &entries[..budget] {
        kept[j] += 1;
    }
    // Within one row the global order is the row order, so the kept
    // entries of row j are exactly its first kept[j] entries.
    let min_size = min_size.min(q).max(1);
    let mut partials = Vec::with_capacity(m);
    for (j, &t) in centers.iter().enumerate() {
        let mut row: Vec<usize> = (0..q).filter(|&v| v != t).collect();
        row.sort_by(|&a, &b| w[[t, b]].total_cmp(&w[[t, a]]).then(a.cmp(&b)));
        let take = kept[j].max(min_size - 1);
        let mut members: Vec<usize> = row[..take].to_vec();
        members.push(t);
        partials.push(members);
    }
    ClusterSet::from_partial(partials, centers.to_vec(), z, q)
}

/// Full clustering pipeline over the rows of `x`, producing `l` clusters
/// (capped at `Q + 1`).
pub fn fuzzy_cluster(
    x: ArrayView2<f64>,
    l: usize,
    opts: &ClusterOptions,
) -> Result<(ClusterSet, AffinityArtifacts)> {
    if l < 2 {
        return Err(IceError::InvalidParameter(format!(
            "cluster count must be >= 2, got {l}"
        )));
    }
    let q = x.nrows();
    let (distances, adjacency) = knn_graph(x)?;
    let affinity = rwr_affinity(adjacency.view(), opts.restart_p, opts.tol, opts.max_iter)?;
    let m = (l - 1).min(q);
    let centers = select_centers(affinity.view(), m)?;
    let z = opts.z.unwrap_or((q as f64 / 3.0).max(1.0));
    let mut clusters = cut_clusters(affinity.view(), &centers, z, opts.min_cluster_size)?;
    clusters.requested_l = l;
    Ok((
        clusters,
        AffinityArtifacts {
            distances,
            adjacency,
            affinity,
            centers,
        },
    ))
}
