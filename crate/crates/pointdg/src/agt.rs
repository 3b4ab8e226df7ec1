//! Adaptive Geometric Token Shift.
//!
//! Points are bucketed into a spatial hash grid with fixed cell size; each
//! cell's members are softly aggregated with weights from a softmax over
//! negative distances to the cell centroid, and the aggregate is fused back
//! into the first C' channels through a residual mix. The whole operation is
//! parameter-free and O(N).
//!
//! The KNN comparator strategies used by the shift ablation live here too;
//! they are brute-force and quadratic by design.

use crate::autodiff::Node;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use std::collections::HashMap;

/// Signed 21-bit packing of the three cell coordinates; collision-free for
/// |coord/h| < 2^20.
const PACK_OFFSET: i64 = 1 << 20;

fn cell_key(cx: i64, cy: i64, cz: i64) -> u64 {
    debug_assert!(cx.abs() < PACK_OFFSET && cy.abs() < PACK_OFFSET && cz.abs() < PACK_OFFSET);
    (((cx + PACK_OFFSET) as u64) << 42)
        | (((cy + PACK_OFFSET) as u64) << 21)
        | ((cz + PACK_OFFSET) as u64)
}

pub struct GridIndex {
    pub h: f64,
    /// point index -> cell index
    pub cell_of: Vec<usize>,
    /// cell index -> member point indices, in ascending point order
    pub members: Vec<Vec<usize>>,
    /// cell index -> mean coordinate of members
    pub centroids: Vec<[f64; 3]>,
    /// cell index -> packed grid key
    pub keys: Vec<u64>,
}

/// Bucket `coords` (Nx3) into cells of size `h`; one pass, O(N).
pub fn build_grid(coords: &Tensor, h: f64) -> Result<GridIndex> {
    if h <= 0.0 {
        return Err(Error::InvalidConfig(format!("cell size must be > 0, got {h}")));
    }
    let n = coords.rows();
    let mut key_to_cell: HashMap<u64, usize> = HashMap::new();
    let mut cell_of = Vec::with_capacity(n);
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut sums: Vec<[f64; 3]> = Vec::new();
    let mut keys: Vec<u64> = Vec::new();
    for i in 0..n {
        let p = coords.row(i);
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCoordinate(i));
        }
        let cx = (p[0] / h).floor() as i64;
        let cy = (p[1] / h).floor() as i64;
        let cz = (p[2] / h).floor() as i64;
        let key = cell_key(cx, cy, cz);
        let cell = *key_to_cell.entry(key).or_insert_with(|| {
            members.push(Vec::new());
            sums.push([0.0; 3]);
            keys.push(key);
            members.len() - 1
        });
        cell_of.push(cell);
        members[cell].push(i);
        sums[cell][0] += p[0];
        sums[cell][1] += p[1];
        sums[cell][2] += p[2];
    }
    let centroids = sums
        .iter()
        .zip(&members)
        .map(|(s, m)| {
            let n = m.len() as f64;
            [s[0] / n, s[1] / n, s[2] / n]
        })
        .collect();
    Ok(GridIndex {
        h,
        cell_of,
        members,
        centroids,
        keys,
    })
}

/// Per-cell softmax weights over negative member-to-centroid distances,
/// aligned with `grid.members`. Each cell's weights sum to 1.
pub fn agt_weights(grid: &GridIndex, coords: &Tensor) -> Vec<Vec<f64>> {
    grid.members
        .iter()
        .zip(&grid.centroids)
        .map(|(members, mu)| {
            let exponents: Vec<f64> = members
                .iter()
                .map(|&j| {
                    let p = coords.row(j);
                    let d = ((p[0] - mu[0]).powi(2)
                        + (p[1] - mu[1]).powi(2)
                        + (p[2] - mu[2]).powi(2))
                    .sqrt();
                    -d
                })
                .collect();
            let m = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = exponents.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.iter().map(|e| e / z).collect()
        })
        .collect()
}

/// How many leading channels the shift perturbs. `None` means C/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgtConfig {
    pub h: f64,
    pub lambda: f64,
    pub c_prime: Option<usize>,
}

impl Default for AgtConfig {
    fn default() -> Self {
        AgtConfig {
            h: 0.2,
            lambda: 0.5,
            c_prime: None,
        }
    }
}

impl AgtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be in (0,1), got {}",
                self.lambda
            )));
        }
        if self.h <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cell size must be > 0, got {}",
                self.h
            )));
        }
        Ok(())
    }

    pub fn c_prime_for(&self, c: usize) -> usize {
        self.c_prime.unwrap_or(c / 2).min(c).max(1)
    }
}

/// Residual fusion shared by AGT and the KNN comparators: out channel c<C' is
/// `λ f + (1-λ) f_hat`, the rest pass through untouched. The aggregation
/// weights depend only on coordinates, so they are constants under autodiff.
enum Aggregation {
    /// per-cell weight lists; every member of a cell shares the aggregate
    Cells {
        cell_of: Vec<usize>,
        members: Vec<Vec<usize>>,
        weights: Vec<Vec<f64>>,
    },
    /// per-point neighbor lists (KNN comparators)
    PerPoint { lists: Vec<Vec<(usize, f64)>> },
}

fn residual_mix(f: &Node, agg: Aggregation, lambda: f64, c_prime: usize) -> Node {
    let fv = f.value_clone();
    let (n, c) = (fv.rows(), fv.cols());
    let cp = c_prime.min(c);
    let mut out = fv.clone();
    match &agg {
        Aggregation::Cells {
            cell_of,
            members,
            weights,
        } => {
            // one aggregate per cell, then distribute
            let mut agg_rows = vec![0.0; members.len() * cp];
            for (cell, (ms, ws)) in members.iter().zip(weights).enumerate() {
                let row = &mut agg_rows[cell * cp..(cell + 1) * cp];
                for (&j, &wj) in ms.iter().zip(ws) {
                    for (slot, &x) in row.iter_mut().zip(&fv.data()[j * c..j * c + cp]) {
                        *slot += wj * x;
                    }
                }
            }
            for i in 0..n {
                let cell = cell_of[i];
                for ch in 0..cp {
                    out.data_mut()[i * c + ch] =
                        lambda * fv.data()[i * c + ch] + (1.0 - lambda) * agg_rows[cell * cp + ch];
                }
            }
        }
        Aggregation::PerPoint { lists } => {
            for (i, list) in lists.iter().enumerate() {
                for ch in 0..cp {
                    let mut s = 0.0;
                    for &(j, wj) in list {
                        s += wj * fv.data()[j * c + ch];
                    }
                    out.data_mut()[i * c + ch] = lambda * fv.data()[i * c + ch] + (1.0 - lambda) * s;
                }
            }
        }
    }
    Node::from_op(
        out,
        vec![f.clone()],
        Box::new(move |_, g| {
            let mut gf = g.clone();
            // pass-through part of the perturbed channels
            for i in 0..n {
                for ch in 0..cp {
                    gf.data_mut()[i * c + ch] = lambda * g.data()[i * c + ch];
                }
            }
            match &agg {
                Aggregation::Cells {
                    cell_of,
                    members,
                    weights,
                } => {
                    // per-cell sum of incoming gradients, then weight by w_j
                    let mut cell_sums = vec![0.0; members.len() * cp];
                    for i in 0..n {
                        let cell = cell_of[i];
                        for ch in 0..cp {
                            cell_sums[cell * cp + ch] += g.data()[i * c + ch];
                        }
                    }
                    for (cell, (ms, ws)) in members.iter().zip(weights).enumerate() {
                        for (&j, &wj) in ms.iter().zip(ws) {
                            for ch in 0..cp {
                                gf.data_mut()[j * c + ch] +=
                                    (1.0 - lambda) * wj * cell_sums[cell * cp + ch];
                            }
                        }
                    }
                }
                Aggregation::PerPoint { lists } => {
                    for (i, list) in lists.iter().enumerate() {
                        for &(j, wj) in list {
                            for ch in 0..cp {
                                gf.data_mut()[j * c + ch] +=
                                    (1.0 - lambda) * wj * g.data()[i * c + ch];
                            }
                        }
                    }
                }
            }
            vec![gf]
        }),
    )
}

/// AGT-Shift: spatial-hash cells, centroid-distance softmax aggregation,
/// partial-channel residual fusion.
pub fn agt_shift(f: &Node, coords: &Tensor, cfg: &AgtConfig) -> Result<Node> {
    cfg.validate()?;
    let shape = f.shape();
    if shape.len() != 2 || shape[0] != coords.rows() {
        return Err(Error::ShapeMismatch(format!(
            "features {:?} do not align with {} coordinates",
            shape,
            coords.rows()
        )));
    }
    let grid = build_grid(coords, cfg.h)?;
    let weights = agt_weights(&grid, coords);
    let cp = cfg.c_prime_for(shape[1]);
    Ok(residual_mix(
        f,
        Aggregation::Cells {
            cell_of: grid.cell_of,
            members: grid.members,
            weights,
        },
        cfg.lambda,
        cp,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnnStrategy {
    /// substitute one uniformly chosen neighbor
    RandOne,
    /// unweighted neighbor mean
    Avg,
    /// softmax over negative distances to the query point
    WAvg,
}

/// Exact k-nearest neighbors of every point, brute force. Ties break toward
/// the lower point index.
pub fn knn_indices(coords: &Tensor, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = coords.rows();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let pi = coords.row(i);
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let pj = coords.row(j);
                let d = ((pi[0] - pj[0]).powi(2)
                    + (pi[1] - pj[1]).powi(2)
                    + (pi[2] - pj[2]).powi(2))
                .sqrt();
                (d, j)
            })
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(dists[..k].iter().map(|&(d, j)| (j, d)).collect());
    }
    Ok(out)
}

/// KNN comparator shift: aggregate k nearest neighbors per the strategy, then
/// fuse through the same residual rule as AGT.
pub fn knn_shift(
    f: &Node,
    coords: &Tensor,
    k: usize,
    strategy: KnnStrategy,
    lambda: f64,
    c_prime: usize,
    rng: &mut Rng,
) -> Result<Node> {
    let neighbors = knn_indices(coords, k)?;
    let lists: Vec<Vec<(usize, f64)>> = neighbors
        .into_iter()
        .map(|nbrs| match strategy {
            KnnStrategy::RandOne => {
                let pick = nbrs[rng.below(nbrs.len())].0;
                vec![(pick, 1.0)]
            }
            KnnStrategy::Avg => {
                let w = 1.0 / nbrs.len() as f64;
                nbrs.into_iter().map(|(j, _)| (j, w)).collect()
            }
            KnnStrategy::WAvg => {
                let m = nbrs
                    .iter()
                    .map(|&(_, d)| -d)
                    .fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = nbrs.iter().map(|&(_, d)| (-d - m).exp()).collect();
                let z: f64 = exps.iter().sum();
                nbrs.into_iter()
                    .zip(exps)
                    .map(|((j, _), e)| (j, e / z))
                    .collect()
            }
        })
        .collect();
    Ok(residual_mix(f, Aggregation::PerPoint { lists }, lambda, c_prime))
}
