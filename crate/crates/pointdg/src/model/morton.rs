//! Z-order serialization of point clouds.
//!
//! Eq.-style sequence attention needs a 1-D token order; sorting by Morton
//! code keeps sequence neighbors spatially close.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const BITS: u32 = 10;
const SCALE: f64 = ((1u32 << BITS) - 1) as f64; // 1023

/// 30-bit Morton code of coordinates in [-1, 1]^3, 10 bits per axis, x in the
/// most significant bit of each triplet.
pub fn morton_code(p: &[f64]) -> u32 {
    let q = |x: f64| -> u32 {
        let clamped = x.clamp(-1.0, 1.0);
        (((clamped + 1.0) * 0.5 * SCALE).round()) as u32
    };
    interleave3(q(p[0]), q(p[1]), q(p[2]))
}

fn interleave3(x: u32, y: u32, z: u32) -> u32 {
    let mut code = 0u32;
    for b in 0..BITS {
        let bit = |v: u32| (v >> b) & 1;
        code |= bit(x) << (3 * b + 2) | bit(y) << (3 * b + 1) | bit(z) << (3 * b);
    }
    code
}

/// Stable permutation of [0, N) ordering rows of `coords` along the Z-curve;
/// ties keep the original order. Coordinates must lie in [-1, 1]^3 (a small
/// rounding slack is tolerated).
pub fn morton_order(coords: &Tensor) -> Result<Vec<usize>> {
    let n = coords.rows();
    let mut keyed: Vec<(u32, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let p = coords.row(i);
        for &x in p {
            if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&x) {
                return Err(Error::CoordOutOfRange(i));
            }
        }
        keyed.push((morton_code(p), i));
    }
    keyed.sort_by_key(|&(code, idx)| (code, idx));
    Ok(keyed.into_iter().map(|(_, idx)| idx).collect())
}

/// Gather rows of a plain tensor by the permutation.
pub fn gather_rows(t: &Tensor, order: &[usize]) -> Tensor {
    let c = t.cols();
    let mut data = Vec::with_capacity(order.len() * c);
    for &i in order {
        data.extend_from_slice(t.row(i));
    }
    Tensor::new(vec![order.len(), c], data).expect("counted")
}
