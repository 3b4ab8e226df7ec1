//! Spatial-mix and channel-mix sublayers, plus the pre-norm they sit behind.

use crate::autodiff::Node;
use crate::error::Result;
use crate::rwkv::biwkv::bi_wkv_node;

/// Token-interaction sublayer parameters: r/k/v/output projections (CxC, no
/// bias), the kernel's decay and bias vectors, and the shift mix coefficient
/// used when the block runs Q-Shift.
pub struct SpatialMixParams {
    pub wr: Node,
    pub wk: Node,
    pub wv: Node,
    pub wo: Node,
    pub decay: Node,
    pub bias: Node,
    pub mu: Node,
}

/// Feed-forward sublayer parameters (squared-ReLU FFN with sigmoid-r gating).
pub struct ChannelMixParams {
    pub wr: Node,
    pub wk: Node,
    pub wv: Node,
    pub mu: Node,
}

/// Per-token standardization with learnable gain and bias.
pub fn layer_norm(x: &Node, gain: &Node, bias: &Node, eps: f64) -> Result<Node> {
    let mu = x.mean(Some(1), true)?;
    let centered = x.sub(&mu)?;
    let var = centered.square().mean(Some(1), true)?;
    let std = var.add_scalar(eps).sqrt()?;
    centered.div(&std)?.mul(gain)?.add(bias)
}

/// Shift-then-attend: `Xs = shift(X)`, project to r/k/v, run the kernel, gate
/// with sigmoid(r), project out. Returns the output together with the k and v
/// projections so the caller can feed the alignment collector.
pub fn spatial_mix(
    x: &Node,
    p: &SpatialMixParams,
    shift: &dyn Fn(&Node) -> Result<Node>,
) -> Result<(Node, Node, Node)> {
    let xs = shift(x)?;
    let r = xs.matmul(&p.wr)?;
    let k = xs.matmul(&p.wk)?;
    let v = xs.matmul(&p.wv)?;
    let wkv = bi_wkv_node(&k, &v, &p.decay, &p.bias)?;
    let out = r.sigmoid().mul(&wkv)?.matmul(&p.wo)?;
    Ok((out, k, v))
}

/// `sigmoid(Xs Wr) ⊙ ((relu(Xs Wk))^2 Wv)`.
pub fn channel_mix(
    x: &Node,
    p: &ChannelMixParams,
    shift: &dyn Fn(&Node) -> Result<Node>,
) -> Result<Node> {
    let xs = shift(x)?;
    let r = xs.matmul(&p.wr)?;
    let hidden = xs.matmul(&p.wk)?.relu().square();
    r.sigmoid().mul(&hidden.matmul(&p.wv)?)
}
