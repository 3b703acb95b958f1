//! Workloads shared by the criterion benches in `benches/core.rs`.

use ice_core::Dataset;
use ndarray::Array2;

/// Deterministic pseudo-random features with a linear label.
pub fn synthetic(q: usize, r: usize) -> Dataset {
    let x = Array2::from_shape_fn((q, r), |(i, j)| {
        ((i * 31 + j * 17) as f64 * 0.618).sin() * 2.0
    });
    let y = x
        .rows()
        .into_iter()
        .map(|row| u8::from(row.sum() > 0.0))
        .collect();
    Dataset::new(x, y).expect("both classes present")
}
