//! Dense row-major f64 tensors with trailing-dimension broadcasting.
//!
//! The shape is an explicit list of dimension sizes; a rank-0 tensor (empty
//! shape) is a scalar. All numeric state in the crate lives in these buffers.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                numel,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        let numel: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; numel],
        }
    }

    /// Rank-0 scalar.
    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1, "item() on non-scalar");
        self.data[0]
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[0]
    }

    /// Columns of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot reshape {:?} to {:?}",
                self.shape, shape
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "transpose needs rank 2, got {:?}",
                self.shape
            )));
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Ok(Tensor {
            shape: vec![n, m],
            data: out,
        })
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::ShapeMismatch(format!(
                "matmul {:?} x {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![0.0; m * n];
        // ikj loop keeps the inner accumulation over contiguous rows of `other`.
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let o_row = &mut out[i * n..(i + 1) * n];
            for (p, &a_ip) in a_row.iter().enumerate() {
                if a_ip == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a_ip * b;
                }
            }
        }
        Ok(Tensor {
            shape: vec![m, n],
            data: out,
        })
    }
}

/// Broadcast shape of two operands under trailing-dimension alignment.
pub fn broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() {
            1
        } else {
            a[i - (rank - a.len())]
        };
        let db = if i < rank - b.len() {
            1
        } else {
            b[i - (rank - b.len())]
        };
        if da != db && da != 1 && db != 1 {
            return Err(Error::ShapeMismatch(format!(
                "cannot broadcast {:?} with {:?}",
                a, b
            )));
        }
        out[i] = da.max(db);
    }
    Ok(out)
}

fn pad_shape(shape: &[usize], rank: usize) -> Vec<usize> {
    let mut padded = vec![1usize; rank];
    padded[rank - shape.len()..].copy_from_slice(shape);
    padded
}

/// Elementwise binary op with broadcasting. Fast paths cover the shapes the
/// model actually produces; the generic path handles the rest.
pub fn binary_broadcast(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if a.shape == b.shape {
        let data = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        return Ok(Tensor {
            shape: a.shape.clone(),
            data,
        });
    }
    // scalar rhs / lhs
    if b.len() == 1 && (b.rank() == 0 || b.rank() <= a.rank()) {
        let y = b.data[0];
        return Ok(a.map(|x| f(x, y)));
    }
    if a.len() == 1 && (a.rank() == 0 || a.rank() <= b.rank()) {
        let x = a.data[0];
        let data = b.data.iter().map(|&y| f(x, y)).collect();
        return Ok(Tensor {
            shape: b.shape.clone(),
            data,
        });
    }
    // [R,C] op [C]: broadcast rhs across rows
    if a.rank() == 2 && b.rank() == 1 && b.shape[0] == a.shape[1] {
        let c = a.shape[1];
        let mut data = Vec::with_capacity(a.len());
        for row in a.data.chunks_exact(c) {
            for (x, y) in row.iter().zip(&b.data) {
                data.push(f(*x, *y));
            }
        }
        return Ok(Tensor {
            shape: a.shape.clone(),
            data,
        });
    }
    // [R,C] op [R,1]: broadcast rhs across columns
    if a.rank() == 2 && b.rank() == 2 && b.shape[0] == a.shape[0] && b.shape[1] == 1 {
        let c = a.shape[1];
        let mut data = Vec::with_capacity(a.len());
        for (r, row) in a.data.chunks_exact(c).enumerate() {
            let y = b.data[r];
            for x in row {
                data.push(f(*x, y));
            }
        }
        return Ok(Tensor {
            shape: a.shape.clone(),
            data,
        });
    }
    // generic path
    let out_shape = broadcast_shape(&a.shape, &b.shape)?;
    let rank = out_shape.len();
    let ap = pad_shape(&a.shape, rank);
    let bp = pad_shape(&b.shape, rank);
    let numel: usize = out_shape.iter().product();
    let mut data = Vec::with_capacity(numel);
    let mut coords = vec![0usize; rank];
    for flat in 0..numel {
        let mut rem = flat;
        for d in (0..rank).rev() {
            coords[d] = rem % out_shape[d];
            rem /= out_shape[d];
        }
        let mut af = 0;
        let mut astride = 1;
        let mut bf = 0;
        let mut bstride = 1;
        for d in (0..rank).rev() {
            let ca = if ap[d] == 1 { 0 } else { coords[d] };
            let cb = if bp[d] == 1 { 0 } else { coords[d] };
            af += ca * astride;
            astride *= ap[d];
            bf += cb * bstride;
            bstride *= bp[d];
        }
        data.push(f(a.data[af], b.data[bf]));
    }
    Tensor::new(out_shape, data)
}

/// Sum a gradient of `grad.shape` down to `target` by collapsing the axes the
/// forward broadcast expanded.
pub fn reduce_to_shape(grad: &Tensor, target: &[usize]) -> Tensor {
    if grad.shape() == target {
        return grad.clone();
    }
    let rank = grad.rank();
    let tp = pad_shape(target, rank);
    let mut out = Tensor::zeros(&tp);
    let shape = grad.shape().to_vec();
    let mut coords = vec![0usize; rank];
    for (flat, &g) in grad.data().iter().enumerate() {
        let mut rem = flat;
        for d in (0..rank).rev() {
            coords[d] = rem % shape[d];
            rem /= shape[d];
        }
        let mut tf = 0;
        let mut stride = 1;
        for d in (0..rank).rev() {
            let c = if tp[d] == 1 { 0 } else { coords[d] };
            tf += c * stride;
            stride *= tp[d];
        }
        out.data[tf] += g;
    }
    out.reshape(target).expect("padded shape has same numel")
}
