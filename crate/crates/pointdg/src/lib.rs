//! Domain-generalized point cloud classification on a linear-attention RWKV
//! backbone.
//!
//! The crate provides:
//! - a minimal dense-tensor + reverse-mode autodiff layer ([`tensor`],
//!   [`autodiff`], [`optim`], [`checkpoint`]),
//! - the bidirectional WKV kernel with a quadratic oracle and an O(T) scan
//!   ([`rwkv`]),
//! - Adaptive Geometric Token Shift over a spatial hash grid plus KNN
//!   comparator strategies ([`agt`]),
//! - cross-domain key-distribution alignment losses ([`losses`]),
//! - the four-stage hierarchical classifier ([`model`]),
//! - a synthetic multi-domain benchmark generator and .xyz file IO ([`data`]),
//! - training / evaluation / ablation / benchmark orchestration ([`harness`]).

pub mod agt;
pub mod autodiff;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod losses;
pub mod model;
pub mod optim;
pub mod rng;
pub mod rwkv;
pub mod tensor;

pub use autodiff::Node;
pub use error::{Error, Result};
pub use tensor::Tensor;
