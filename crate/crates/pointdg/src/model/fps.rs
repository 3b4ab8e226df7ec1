//! Farthest point sampling with a fixed start index.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Greedy subsample of `m` anchor indices maximizing the minimum distance to
/// the already-selected set. Starts at index 0; distance ties break toward
/// the lowest index. Deterministic.
pub fn farthest_point_sample(coords: &Tensor, m: usize) -> Result<Vec<usize>> {
    let n = coords.rows();
    if m > n {
        return Err(Error::MTooLarge { m, n });
    }
    if m == 0 {
        return Ok(vec![]);
    }
    let mut selected = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut current = 0usize;
    taken[0] = true;
    selected.push(current);
    for _ in 1..m {
        let p = coords.row(current);
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for i in 0..n {
            let q = coords.row(i);
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            // coincident duplicates make every candidate distance 0; skipping
            // taken points keeps the anchors distinct indices
            if !taken[i] && min_d2[i] > best_d2 {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
        taken[current] = true;
        selected.push(current);
    }
    Ok(selected)
}
