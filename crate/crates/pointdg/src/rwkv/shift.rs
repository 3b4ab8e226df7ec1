//! Quad-directional token shift for 1-D token sequences.
//!
//! Channel quarter j of the shifted tensor holds the features of the token at
//! `t + offsets[j]`, clamped at the sequence ends; the output is
//! `X + (1 - mu) * X_star` with a per-channel mix coefficient.

use crate::autodiff::Node;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_OFFSETS: [i64; 4] = [-1, 1, -2, 2];

/// Source row for each (token, quarter) pair under clamped offsets.
pub fn shift_index_map(t_len: usize, offsets: &[i64; 4]) -> Vec<[usize; 4]> {
    (0..t_len)
        .map(|t| {
            let mut row = [0usize; 4];
            for (q, &off) in offsets.iter().enumerate() {
                let src = (t as i64 + off).clamp(0, t_len as i64 - 1);
                row[q] = src as usize;
            }
            row
        })
        .collect()
}

/// Build X* by gathering per-quarter rows. Pure tensor form used by the
/// oracle tests.
pub fn shift_gather(x: &Tensor, offsets: &[i64; 4]) -> Result<Tensor> {
    let (t_len, c) = (x.shape()[0], x.shape()[1]);
    if c % 4 != 0 {
        return Err(Error::ChannelsNotDivisibleBy4(c));
    }
    let quarter = c / 4;
    let map = shift_index_map(t_len, offsets);
    let mut out = Tensor::zeros(x.shape());
    for t in 0..t_len {
        for q in 0..4 {
            let src = map[t][q];
            let lo = q * quarter;
            out.data_mut()[t * c + lo..t * c + lo + quarter]
                .copy_from_slice(&x.data()[src * c + lo..src * c + lo + quarter]);
        }
    }
    Ok(out)
}

fn shift_gather_node(x: &Node, offsets: [i64; 4]) -> Result<Node> {
    let value = shift_gather(&x.value(), &offsets)?;
    let shape = x.shape();
    let (t_len, c) = (shape[0], shape[1]);
    let quarter = c / 4;
    let map = shift_index_map(t_len, &offsets);
    Ok(Node::from_op(
        value,
        vec![x.clone()],
        Box::new(move |_, g| {
            let mut gx = Tensor::zeros(&[t_len, c]);
            for t in 0..t_len {
                for q in 0..4 {
                    let src = map[t][q];
                    let lo = q * quarter;
                    for j in 0..quarter {
                        gx.data_mut()[src * c + lo + j] += g.data()[t * c + lo + j];
                    }
                }
            }
            vec![gx]
        }),
    ))
}

/// `X + (1 - mu) ⊙ X_star`. `mu` is a learnable per-channel vector in [0,1];
/// the caller clamps it after optimizer steps.
pub fn q_shift(x: &Node, mu: &Node, offsets: [i64; 4]) -> Result<Node> {
    let x_star = shift_gather_node(x, offsets)?;
    let one_minus_mu = Node::scalar(1.0).sub(mu)?;
    x.add(&x_star.mul(&one_minus_mu)?)
}
