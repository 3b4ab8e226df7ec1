//! Segment max pooling: reduce N feature rows to one row per segment by
//! elementwise max, routing gradients to the argmax element (ties toward the
//! lowest row index).

use crate::autodiff::Node;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `assignment[i]` maps row i to a segment in [0, segments). Every segment
/// must be non-empty.
pub fn segment_max(x: &Node, assignment: &[usize], segments: usize) -> Result<Node> {
    let shape = x.shape();
    if shape.len() != 2 || shape[0] != assignment.len() {
        return Err(Error::ShapeMismatch(format!(
            "features {:?} vs {} assignments",
            shape,
            assignment.len()
        )));
    }
    let (n, c) = (shape[0], shape[1]);
    let v = x.value_clone();
    let mut out = Tensor::full(&[segments, c], f64::NEG_INFINITY);
    let mut argmax = vec![usize::MAX; segments * c];
    for i in 0..n {
        let seg = assignment[i];
        debug_assert!(seg < segments);
        for ch in 0..c {
            let val = v.data()[i * c + ch];
            let slot = seg * c + ch;
            if val > out.data()[slot] || argmax[slot] == usize::MAX {
                out.data_mut()[slot] = val;
                argmax[slot] = i;
            }
        }
    }
    if argmax.iter().any(|&a| a == usize::MAX) {
        return Err(Error::ShapeMismatch("empty segment in segment_max".into()));
    }
    Ok(Node::from_op(
        out,
        vec![x.clone()],
        Box::new(move |_, g| {
            let mut gx = Tensor::zeros(&[n, c]);
            for seg_ch in 0..argmax.len() {
                let i = argmax[seg_ch];
                let ch = seg_ch % c;
                gx.data_mut()[i * c + ch] += g.data()[seg_ch];
            }
            vec![gx]
        }),
    ))
}
