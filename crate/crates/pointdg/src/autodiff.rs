//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Node`] is a shared handle to a value, its gradient buffer, and the
//! backward rule that produced it. Graphs are built per forward pass and
//! dropped afterwards; leaf nodes (parameters) persist across passes and
//! accumulate gradients until the caller zeroes them.

use std::cell::{Ref, RefCell};
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::tensor::{binary_broadcast, broadcast_shape, reduce_to_shape, Tensor};

/// Backward rule: given the node's value and incoming gradient, produce one
/// gradient contribution per parent, each matching that parent's shape.
type BackFn = Box<dyn Fn(&Tensor, &Tensor) -> Vec<Tensor>>;

struct NodeInner {
    value: Tensor,
    grad: Tensor,
    parents: Vec<Node>,
    backward: Option<BackFn>,
}

#[derive(Clone)]
pub struct Node(Rc<RefCell<NodeInner>>);

impl Node {
    /// Leaf node with a zero-initialized gradient of the same shape.
    pub fn leaf(value: Tensor) -> Node {
        let grad = Tensor::zeros(value.shape());
        Node(Rc::new(RefCell::new(NodeInner {
            value,
            grad,
            parents: Vec::new(),
            backward: None,
        })))
    }

    pub fn scalar(v: f64) -> Node {
        Node::leaf(Tensor::scalar(v))
    }

    /// Interior node produced by an operation. Exposed within the crate so
    /// kernels (Bi-WKV, token shifts, pooling) can register custom rules.
    pub(crate) fn from_op(value: Tensor, parents: Vec<Node>, backward: BackFn) -> Node {
        let grad = Tensor::zeros(value.shape());
        Node(Rc::new(RefCell::new(NodeInner {
            value,
            grad,
            parents,
            backward: Some(backward),
        })))
    }

    pub fn value(&self) -> Ref<'_, Tensor> {
        Ref::map(self.0.borrow(), |n| &n.value)
    }

    pub fn value_clone(&self) -> Tensor {
        self.0.borrow().value.clone()
    }

    pub fn grad(&self) -> Ref<'_, Tensor> {
        Ref::map(self.0.borrow(), |n| &n.grad)
    }

    pub fn grad_clone(&self) -> Tensor {
        self.0.borrow().grad.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.borrow().value.shape().to_vec()
    }

    pub fn item(&self) -> f64 {
        self.0.borrow().value.item()
    }

    /// Replace the stored value (optimizer updates). Shape must be unchanged.
    pub fn set_value(&self, value: Tensor) {
        let mut inner = self.0.borrow_mut();
        debug_assert_eq!(inner.value.shape(), value.shape());
        inner.value = value;
    }

    /// Mutate the stored value in place.
    pub fn update_value(&self, f: impl FnOnce(&mut Tensor)) {
        f(&mut self.0.borrow_mut().value)
    }

    pub fn zero_grad(&self) {
        let mut inner = self.0.borrow_mut();
        inner.grad = Tensor::zeros(inner.value.shape());
    }

    fn add_grad(&self, contribution: &Tensor) {
        let mut inner = self.0.borrow_mut();
        debug_assert_eq!(inner.grad.shape(), contribution.shape());
        for (g, c) in inner.grad.data_mut().iter_mut().zip(contribution.data()) {
            *g += c;
        }
    }

    fn ptr(&self) -> *const RefCell<NodeInner> {
        Rc::as_ptr(&self.0)
    }

    // ---- elementwise binary ops -------------------------------------------

    pub fn add(&self, other: &Node) -> Result<Node> {
        let value = binary_broadcast(&self.value(), &other.value(), |x, y| x + y)?;
        let (a, b) = (self.clone(), other.clone());
        let (sa, sb) = (self.shape(), other.shape());
        Ok(Node::from_op(
            value,
            vec![a, b],
            Box::new(move |_, g| {
                vec![reduce_to_shape(g, &sa), reduce_to_shape(g, &sb)]
            }),
        ))
    }

    pub fn sub(&self, other: &Node) -> Result<Node> {
        let value = binary_broadcast(&self.value(), &other.value(), |x, y| x - y)?;
        let (a, b) = (self.clone(), other.clone());
        let (sa, sb) = (self.shape(), other.shape());
        Ok(Node::from_op(
            value,
            vec![a, b],
            Box::new(move |_, g| {
                let neg = g.map(|x| -x);
                vec![reduce_to_shape(g, &sa), reduce_to_shape(&neg, &sb)]
            }),
        ))
    }

    pub fn mul(&self, other: &Node) -> Result<Node> {
        let value = binary_broadcast(&self.value(), &other.value(), |x, y| x * y)?;
        let (a, b) = (self.clone(), other.clone());
        let (sa, sb) = (self.shape(), other.shape());
        Ok(Node::from_op(
            value,
            vec![a.clone(), b.clone()],
            Box::new(move |_, g| {
                let ga = binary_broadcast(g, &b.value(), |x, y| x * y).expect("fwd checked");
                let gb = binary_broadcast(g, &a.value(), |x, y| x * y).expect("fwd checked");
                vec![reduce_to_shape(&ga, &sa), reduce_to_shape(&gb, &sb)]
            }),
        ))
    }

    pub fn div(&self, other: &Node) -> Result<Node> {
        if other.value().data().iter().any(|&y| y == 0.0) {
            return Err(Error::DomainError("division by zero".into()));
        }
        let value = binary_broadcast(&self.value(), &other.value(), |x, y| x / y)?;
        let (a, b) = (self.clone(), other.clone());
        let (sa, sb) = (self.shape(), other.shape());
        Ok(Node::from_op(
            value,
            vec![a.clone(), b.clone()],
            Box::new(move |_, g| {
                let bv = b.value();
                let ga = binary_broadcast(g, &bv, |x, y| x / y).expect("fwd checked");
                // d/db (a/b) = -a / b^2
                let av = a.value();
                let coef =
                    binary_broadcast(&av, &bv, |x, y| -x / (y * y)).expect("fwd checked");
                drop(av);
                drop(bv);
                let gb = binary_broadcast(g, &coef, |x, y| x * y).expect("fwd checked");
                vec![reduce_to_shape(&ga, &sa), reduce_to_shape(&gb, &sb)]
            }),
        ))
    }

    // ---- elementwise unary ops --------------------------------------------

    pub fn exp(&self) -> Node {
        let value = self.value().map(f64::exp);
        Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |out, g| {
                vec![binary_broadcast(g, out, |gi, o| gi * o).expect("same shape")]
            }),
        )
    }

    pub fn log(&self) -> Result<Node> {
        if self.value().data().iter().any(|&x| x <= 0.0) {
            return Err(Error::DomainError("log of non-positive input".into()));
        }
        let value = self.value().map(f64::ln);
        let a = self.clone();
        Ok(Node::from_op(
            value,
            vec![a.clone()],
            Box::new(move |_, g| {
                vec![binary_broadcast(g, &a.value(), |gi, x| gi / x).expect("same shape")]
            }),
        ))
    }

    pub fn relu(&self) -> Node {
        let value = self.value().map(|x| x.max(0.0));
        let a = self.clone();
        Node::from_op(
            value,
            vec![a.clone()],
            Box::new(move |_, g| {
                vec![binary_broadcast(g, &a.value(), |gi, x| if x > 0.0 { gi } else { 0.0 })
                    .expect("same shape")]
            }),
        )
    }

    pub fn sigmoid(&self) -> Node {
        let value = self.value().map(|x| {
            // split on sign so exp never overflows
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        });
        Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |out, g| {
                vec![binary_broadcast(g, out, |gi, s| gi * s * (1.0 - s)).expect("same shape")]
            }),
        )
    }

    pub fn square(&self) -> Node {
        let value = self.value().map(|x| x * x);
        let a = self.clone();
        Node::from_op(
            value,
            vec![a.clone()],
            Box::new(move |_, g| {
                vec![binary_broadcast(g, &a.value(), |gi, x| gi * 2.0 * x).expect("same shape")]
            }),
        )
    }

    pub fn sqrt(&self) -> Result<Node> {
        if self.value().data().iter().any(|&x| x < 0.0) {
            return Err(Error::DomainError("sqrt of negative input".into()));
        }
        let value = self.value().map(f64::sqrt);
        Ok(Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |out, g| {
                vec![binary_broadcast(g, out, |gi, s| gi * 0.5 / s).expect("same shape")]
            }),
        ))
    }

    pub fn neg(&self) -> Node {
        let value = self.value().map(|x| -x);
        Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |_, g| vec![g.map(|x| -x)]),
        )
    }

    pub fn add_scalar(&self, c: f64) -> Node {
        let value = self.value().map(|x| x + c);
        Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |_, g| vec![g.clone()]),
        )
    }

    pub fn mul_scalar(&self, c: f64) -> Node {
        let value = self.value().map(|x| x * c);
        Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |_, g| vec![g.map(|x| x * c)]),
        )
    }

    // ---- linear algebra ----------------------------------------------------

    pub fn matmul(&self, other: &Node) -> Result<Node> {
        let value = self.value().matmul(&other.value())?;
        let (a, b) = (self.clone(), other.clone());
        Ok(Node::from_op(
            value,
            vec![a.clone(), b.clone()],
            Box::new(move |_, g| {
                let bt = b.value().transpose().expect("rank 2");
                let at = a.value().transpose().expect("rank 2");
                vec![
                    g.matmul(&bt).expect("fwd checked"),
                    at.matmul(g).expect("fwd checked"),
                ]
            }),
        ))
    }

    pub fn transpose(&self) -> Result<Node> {
        let value = self.value().transpose()?;
        Ok(Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |_, g| vec![g.transpose().expect("rank 2")]),
        ))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Node> {
        let value = self.value().reshape(shape)?;
        let orig = self.shape();
        Ok(Node::from_op(
            value,
            vec![self.clone()],
            Box::new(move |_, g| vec![g.reshape(&orig).expect("same numel")]),
        ))
    }

    // ---- reductions ---------------------------------------------------------

    /// Sum over one axis, or over all elements when `axis` is `None`.
    pub fn sum(&self, axis: Option<usize>, keepdims: bool) -> Result<Node> {
        self.reduce_linear(axis, keepdims, 1.0)
    }

    pub fn mean(&self, axis: Option<usize>, keepdims: bool) -> Result<Node> {
        let n = match axis {
            None => self.0.borrow().value.len(),
            Some(ax) => {
                let shape = self.shape();
                if ax >= shape.len() {
                    return Err(Error::InvalidAxis {
                        axis: ax,
                        rank: shape.len(),
                    });
                }
                shape[ax]
            }
        };
        self.reduce_linear(axis, keepdims, 1.0 / n as f64)
    }

    fn reduce_linear(&self, axis: Option<usize>, keepdims: bool, scale: f64) -> Result<Node> {
        let v = self.value();
        let in_shape = v.shape().to_vec();
        let (out_shape, out, _) = reduce_apply(&v, axis, keepdims, scale, false)?;
        drop(v);
        let ax = axis;
        Ok(Node::from_op(
            Tensor::new(out_shape, out)?,
            vec![self.clone()],
            Box::new(move |_, g| {
                vec![expand_reduced(g, &in_shape, ax, scale)]
            }),
        ))
    }

    /// Max over one axis or all elements. Backpropagates to the argmax only;
    /// ties break toward the lowest flat index.
    pub fn max(&self, axis: Option<usize>, keepdims: bool) -> Result<Node> {
        let v = self.value();
        let in_shape = v.shape().to_vec();
        let (out_shape, out, argmax) = reduce_apply(&v, axis, keepdims, 1.0, true)?;
        drop(v);
        Ok(Node::from_op(
            Tensor::new(out_shape, out)?,
            vec![self.clone()],
            Box::new(move |_, g| {
                let mut gx = Tensor::zeros(&in_shape);
                for (slot, &src) in argmax.iter().enumerate() {
                    gx.data_mut()[src] += g.data()[slot];
                }
                vec![gx]
            }),
        ))
    }

    // ---- concatenation -------------------------------------------------------

    /// Concatenate along axis 0. Inputs must share trailing dimensions:
    /// rank-1 parts give a longer rank-1 vector, rank-2 parts stack rows.
    pub fn concat0(parts: &[Node]) -> Result<Node> {
        if parts.is_empty() {
            return Err(Error::ShapeMismatch("concat of zero tensors".into()));
        }
        let first = parts[0].shape();
        let rank = first.len();
        if rank == 0 {
            return Err(Error::ShapeMismatch("cannot concat scalars".into()));
        }
        let tail = &first[1..];
        let mut rows = 0usize;
        for p in parts {
            let s = p.shape();
            if s.len() != rank || &s[1..] != tail {
                return Err(Error::ShapeMismatch(format!(
                    "concat parts {:?} vs {:?}",
                    first, s
                )));
            }
            rows += s[0];
        }
        let mut shape = first.clone();
        shape[0] = rows;
        let mut data = Vec::with_capacity(shape.iter().product());
        for p in parts {
            data.extend_from_slice(p.value().data());
        }
        let sizes: Vec<usize> = parts.iter().map(|p| p.value().len()).collect();
        let part_shapes: Vec<Vec<usize>> = parts.iter().map(|p| p.shape()).collect();
        Ok(Node::from_op(
            Tensor::new(shape, data)?,
            parts.to_vec(),
            Box::new(move |_, g| {
                let mut out = Vec::with_capacity(sizes.len());
                let mut offset = 0;
                for (len, shape) in sizes.iter().zip(&part_shapes) {
                    let chunk = g.data()[offset..offset + len].to_vec();
                    out.push(Tensor::new(shape.clone(), chunk).expect("fwd checked"));
                    offset += len;
                }
                out
            }),
        ))
    }

    /// Stack rank-1 vectors of equal length into a rank-2 matrix.
    pub fn stack_rows(parts: &[Node]) -> Result<Node> {
        if parts.is_empty() {
            return Err(Error::ShapeMismatch("stack of zero tensors".into()));
        }
        let cols = {
            let s = parts[0].shape();
            if s.len() != 1 {
                return Err(Error::ShapeMismatch(format!(
                    "stack_rows needs rank-1 parts, got {:?}",
                    s
                )));
            }
            s[0]
        };
        let mut data = Vec::with_capacity(parts.len() * cols);
        for p in parts {
            if p.shape() != [cols] {
                return Err(Error::ShapeMismatch("stack_rows length mismatch".into()));
            }
            data.extend_from_slice(p.value().data());
        }
        let n = parts.len();
        Ok(Node::from_op(
            Tensor::new(vec![n, cols], data)?,
            parts.to_vec(),
            Box::new(move |_, g| {
                (0..n)
                    .map(|i| Tensor::from_vec(g.data()[i * cols..(i + 1) * cols].to_vec()))
                    .collect()
            }),
        ))
    }

    // ---- backward ------------------------------------------------------------

    /// Reverse-mode sweep from a scalar root. Each call adds exactly
    /// d(root)/d(node) into every reachable node's grad, so repeated calls
    /// without zeroing accumulate; the caller zeroes between steps.
    pub fn backward(&self) -> Result<()> {
        if self.0.borrow().value.len() != 1 {
            return Err(Error::NonScalarRoot(self.shape()));
        }
        let order = topo_order(self);
        // per-pass gradients live in scratch so a second backward over the
        // same graph does not compound through interior nodes
        let mut scratch: HashMap<*const RefCell<NodeInner>, Tensor> = HashMap::new();
        scratch.insert(self.ptr(), Tensor::full(&self.0.borrow().value.shape().to_vec(), 1.0));
        for node in order.iter().rev() {
            let g = match scratch.remove(&node.ptr()) {
                Some(g) => g,
                None => continue, // no path carried gradient here
            };
            {
                let inner = node.0.borrow();
                if let Some(f) = &inner.backward {
                    let contributions = f(&inner.value, &g);
                    debug_assert_eq!(contributions.len(), inner.parents.len());
                    for (parent, c) in inner.parents.iter().zip(contributions) {
                        match scratch.entry(parent.ptr()) {
                            std::collections::hash_map::Entry::Occupied(mut e) => {
                                for (a, b) in e.get_mut().data_mut().iter_mut().zip(c.data()) {
                                    *a += b;
                                }
                            }
                            std::collections::hash_map::Entry::Vacant(e) => {
                                e.insert(c);
                            }
                        }
                    }
                }
            }
            node.add_grad(&g);
        }
        Ok(())
    }
}

/// Post-order (parents before children) over the DAG reachable from `root`.
fn topo_order(root: &Node) -> Vec<Node> {
    let mut order = Vec::new();
    let mut visited: HashSet<*const _> = HashSet::new();
    let mut stack: Vec<(Node, bool)> = vec![(root.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            order.push(node);
            continue;
        }
        if !visited.insert(node.ptr()) {
            continue;
        }
        stack.push((node.clone(), true));
        let inner = node.0.borrow();
        for p in &inner.parents {
            if !visited.contains(&p.ptr()) {
                stack.push((p.clone(), false));
            }
        }
    }
    order
}

/// Shared reduction kernel. Returns (out_shape, data, argmax_flat_indices);
/// argmax is filled only when `track_argmax` is set.
fn reduce_apply(
    v: &Tensor,
    axis: Option<usize>,
    keepdims: bool,
    scale: f64,
    track_argmax: bool,
) -> Result<(Vec<usize>, Vec<f64>, Vec<usize>)> {
    let shape = v.shape();
    match axis {
        None => {
            let out_shape = if keepdims {
                vec![1; shape.len()]
            } else {
                vec![]
            };
            if track_argmax {
                let mut best = 0usize;
                for (i, &x) in v.data().iter().enumerate() {
                    if x > v.data()[best] {
                        best = i;
                    }
                }
                Ok((out_shape, vec![v.data()[best]], vec![best]))
            } else {
                let s: f64 = v.data().iter().sum();
                Ok((out_shape, vec![s * scale], vec![]))
            }
        }
        Some(ax) => {
            if ax >= shape.len() {
                return Err(Error::InvalidAxis {
                    axis: ax,
                    rank: shape.len(),
                });
            }
            let outer: usize = shape[..ax].iter().product();
            let mid = shape[ax];
            let inner: usize = shape[ax + 1..].iter().product();
            let mut out_shape: Vec<usize> = Vec::new();
            out_shape.extend_from_slice(&shape[..ax]);
            if keepdims {
                out_shape.push(1);
            }
            out_shape.extend_from_slice(&shape[ax + 1..]);
            let mut out = vec![0.0; outer * inner];
            let mut argmax = vec![0usize; if track_argmax { outer * inner } else { 0 }];
            for o in 0..outer {
                for i in 0..inner {
                    let slot = o * inner + i;
                    if track_argmax {
                        let mut best_idx = o * mid * inner + i;
                        let mut best = v.data()[best_idx];
                        for m in 1..mid {
                            let idx = (o * mid + m) * inner + i;
                            if v.data()[idx] > best {
                                best = v.data()[idx];
                                best_idx = idx;
                            }
                        }
                        out[slot] = best;
                        argmax[slot] = best_idx;
                    } else {
                        let mut s = 0.0;
                        for m in 0..mid {
                            s += v.data()[(o * mid + m) * inner + i];
                        }
                        out[slot] = s * scale;
                    }
                }
            }
            Ok((out_shape, out, argmax))
        }
    }
}

/// Broadcast a reduced gradient back over the collapsed axis, scaling each
/// copy (1 for sum, 1/n for mean).
fn expand_reduced(g: &Tensor, in_shape: &[usize], axis: Option<usize>, scale: f64) -> Tensor {
    let mut out = Tensor::zeros(in_shape);
    match axis {
        None => {
            let gv = g.data()[0] * scale;
            for x in out.data_mut() {
                *x = gv;
            }
        }
        Some(ax) => {
            let outer: usize = in_shape[..ax].iter().product();
            let mid = in_shape[ax];
            let inner: usize = in_shape[ax + 1..].iter().product();
            for o in 0..outer {
                for m in 0..mid {
                    for i in 0..inner {
                        out.data_mut()[(o * mid + m) * inner + i] = g.data()[o * inner + i] * scale;
                    }
                }
            }
        }
    }
    out
}

/// Check that broadcasting two nodes is possible (exposed for callers that
/// want to validate shapes before building a graph).
pub fn broadcast_ok(a: &Node, b: &Node) -> bool {
    broadcast_shape(&a.shape(), &b.shape()).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn exp_of_zero_one() {
        let x = Node::leaf(t(&[2], &[0.0, 1.0]));
        let y = x.exp();
        let v = y.value_clone();
        assert!((v.data()[0] - 1.0).abs() < 1e-15);
        assert!((v.data()[1] - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn add_trivial() {
        let a = Node::leaf(t(&[2], &[1.0, 2.0]));
        let b = Node::leaf(t(&[2], &[3.0, 4.0]));
        assert_eq!(a.add(&b).unwrap().value_clone().data(), &[4.0, 6.0]);
    }

    #[test]
    fn sigmoid_at_zero() {
        let x = Node::scalar(0.0);
        assert_eq!(x.sigmoid().item(), 0.5);
    }

    #[test]
    fn mean_of_three() {
        let x = Node::leaf(t(&[3], &[1.0, 2.0, 3.0]));
        assert_eq!(x.mean(None, false).unwrap().item(), 2.0);
    }

    #[test]
    fn max_tie_goes_to_lowest_index() {
        let x = Node::leaf(t(&[3], &[3.0, 3.0, 1.0]));
        let m = x.max(None, false).unwrap();
        m.backward().unwrap();
        assert_eq!(x.grad_clone().data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn sum_axis0_of_ones() {
        let x = Node::leaf(Tensor::full(&[3, 2], 1.0));
        let s = x.sum(Some(0), false).unwrap();
        assert_eq!(s.value_clone().data(), &[3.0, 3.0]);
    }

    #[test]
    fn backward_sum_of_squares() {
        let x = Node::leaf(t(&[2], &[1.0, 2.0]));
        let root = x.square().sum(None, false).unwrap();
        root.backward().unwrap();
        assert_eq!(x.grad_clone().data(), &[2.0, 4.0]);
    }

    #[test]
    fn backward_constant_leaves_zero_grads() {
        let x = Node::leaf(t(&[2], &[1.0, 2.0]));
        let c = Node::scalar(5.0);
        let root = c.mul_scalar(2.0);
        root.backward().unwrap();
        assert_eq!(x.grad_clone().data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let x = Node::leaf(t(&[2], &[1.0, 2.0]));
        assert!(matches!(x.backward(), Err(Error::NonScalarRoot(_))));
    }

    #[test]
    fn repeated_backward_accumulates() {
        let x = Node::leaf(t(&[1], &[3.0]));
        let root = x.square().sum(None, false).unwrap();
        root.backward().unwrap();
        root.backward().unwrap();
        assert_eq!(x.grad_clone().data(), &[12.0]);
        x.zero_grad();
        assert_eq!(x.grad_clone().data(), &[0.0]);
    }

    #[test]
    fn matmul_identity_passthrough() {
        let i2 = Node::leaf(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
        let a = Node::leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        let c = i2.matmul(&a).unwrap();
        assert_eq!(c.value_clone().data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn log_rejects_non_positive() {
        let x = Node::leaf(t(&[2], &[1.0, 0.0]));
        assert!(matches!(x.log(), Err(Error::DomainError(_))));
    }

    #[test]
    fn div_rejects_zero_denominator() {
        let a = Node::leaf(t(&[2], &[1.0, 2.0]));
        let b = Node::leaf(t(&[2], &[1.0, 0.0]));
        assert!(a.div(&b).is_err());
    }

    #[test]
    fn invalid_axis_rejected() {
        let x = Node::leaf(Tensor::zeros(&[2, 2]));
        assert!(matches!(
            x.sum(Some(2), false),
            Err(Error::InvalidAxis { .. })
        ));
    }

    #[test]
    fn shared_subexpression_accumulates_once_per_path() {
        // y = x*x + x  => dy/dx = 2x + 1
        let x = Node::leaf(t(&[1], &[3.0]));
        let root = x.mul(&x).unwrap().add(&x).unwrap().sum(None, false).unwrap();
        root.backward().unwrap();
        assert_eq!(x.grad_clone().data(), &[7.0]);
    }
}
