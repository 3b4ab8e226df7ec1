//! Classification and cross-domain alignment objectives.
//!
//! The alignment loss matches per-domain key statistics (mean vector and
//! covariance matrix) across every unordered pair of source domains:
//!
//! ```text
//! L = (1/|P|) * sum_{(i,j) in P}  ||mu_i - mu_j||^2 + ||Sigma_i - Sigma_j||_F^2
//! ```
//!
//! Keys are pooled per (layer, domain) by the [`KeyCollector`] during the
//! forward pass; statistics are never mixed across layers of different widths
//! and the per-layer losses are averaged.

use std::collections::BTreeMap;

use crate::autodiff::Node;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Per-domain first and second moments of pooled key rows.
#[derive(Clone, Debug)]
pub struct KeyStats {
    pub domain_id: usize,
    pub mu: Tensor,
    pub sigma: Tensor,
    pub count: usize,
}

/// Column mean and population covariance of a row matrix, differentiable.
pub fn key_stats(keys: &Node) -> Result<(Node, Node)> {
    let shape = keys.shape();
    if shape.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "key matrix must be rank 2, got {:?}",
            shape
        )));
    }
    let m = shape[0];
    if m < 2 {
        return Err(Error::TooFewRows(m));
    }
    let mu_row = keys.mean(Some(0), true)?; // [1, C]
    let centered = keys.sub(&mu_row)?;
    let sigma = centered
        .transpose()?
        .matmul(&centered)?
        .mul_scalar(1.0 / m as f64);
    let mu = mu_row.reshape(&[shape[1]])?;
    Ok((mu, sigma))
}

/// Plain-tensor variant used for analysis and the property tests.
pub fn key_stats_tensor(keys: &Tensor) -> Result<(Tensor, Tensor)> {
    if keys.rank() != 2 || keys.rows() < 2 {
        return Err(Error::TooFewRows(if keys.rank() == 2 { keys.rows() } else { 0 }));
    }
    let (m, c) = (keys.rows(), keys.cols());
    let mut mu = vec![0.0; c];
    for r in 0..m {
        for (s, &x) in mu.iter_mut().zip(keys.row(r)) {
            *s += x;
        }
    }
    for s in &mut mu {
        *s /= m as f64;
    }
    let mut sigma = vec![0.0; c * c];
    for r in 0..m {
        let row = keys.row(r);
        for i in 0..c {
            let di = row[i] - mu[i];
            for j in 0..c {
                sigma[i * c + j] += di * (row[j] - mu[j]);
            }
        }
    }
    for s in &mut sigma {
        *s /= m as f64;
    }
    Ok((Tensor::from_vec(mu), Tensor::new(vec![c, c], sigma)?))
}

/// Mean over all unordered domain pairs of squared mean distance plus squared
/// Frobenius covariance distance. A single domain gives exactly zero.
pub fn cd_kda_loss(stats: &[(Node, Node)]) -> Result<Node> {
    if stats.len() < 2 {
        return Ok(Node::scalar(0.0));
    }
    let mut terms: Vec<Node> = Vec::new();
    for i in 0..stats.len() {
        for j in i + 1..stats.len() {
            let dmu = stats[i].0.sub(&stats[j].0)?.square().sum(None, false)?;
            let dsig = stats[i].1.sub(&stats[j].1)?.square().sum(None, false)?;
            terms.push(dmu.add(&dsig)?);
        }
    }
    let mut total = terms[0].clone();
    for t in &terms[1..] {
        total = total.add(t)?;
    }
    Ok(total.mul_scalar(1.0 / terms.len() as f64))
}

/// Non-differentiable twin of [`cd_kda_loss`] over plain statistics.
pub fn cd_kda_loss_tensor(stats: &[KeyStats]) -> f64 {
    if stats.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..stats.len() {
        for j in i + 1..stats.len() {
            let dmu: f64 = stats[i]
                .mu
                .data()
                .iter()
                .zip(stats[j].mu.data())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            let dsig: f64 = stats[i]
                .sigma
                .data()
                .iter()
                .zip(stats[j].sigma.data())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            total += dmu + dsig;
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Mean over the batch of -log softmax(logits)[label], with a max shift so
/// arbitrarily large logits stay finite.
pub fn cross_entropy(logits: &Node, labels: &[usize]) -> Result<Node> {
    let shape = logits.shape();
    if shape.len() != 2 || shape[0] != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "logits {:?} vs {} labels",
            shape,
            labels.len()
        )));
    }
    let (b, k) = (shape[0], shape[1]);
    for &l in labels {
        if l >= k {
            return Err(Error::LabelOutOfRange { label: l, classes: k });
        }
    }
    let v = logits.value_clone();
    let mut loss = 0.0;
    // softmax probabilities cached for the backward rule
    let mut probs = Tensor::zeros(&[b, k]);
    for r in 0..b {
        let row = v.row(r);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|x| (x - m).exp()).sum();
        for (j, &x) in row.iter().enumerate() {
            probs.data_mut()[r * k + j] = (x - m).exp() / z;
        }
        loss += -(row[labels[r]] - m - z.ln());
    }
    loss /= b as f64;
    let labels = labels.to_vec();
    Ok(Node::from_op(
        Tensor::scalar(loss),
        vec![logits.clone()],
        Box::new(move |_, g| {
            let gs = g.item() / b as f64;
            let mut gx = probs.clone();
            for (r, &l) in labels.iter().enumerate() {
                gx.data_mut()[r * k + l] -= 1.0;
            }
            for x in gx.data_mut() {
                *x *= gs;
            }
            vec![gx]
        }),
    ))
}

/// `lambda1 * cls + lambda2 * kda`.
pub fn total_loss(cls: &Node, kda: &Node, lambda1: f64, lambda2: f64) -> Result<Node> {
    cls.mul_scalar(lambda1).add(&kda.mul_scalar(lambda2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlignMode {
    None,
    KOnly,
    VOnly,
    KAndV,
}

impl AlignMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlignMode::None => "none",
            AlignMode::KOnly => "only-k",
            AlignMode::VOnly => "only-v",
            AlignMode::KAndV => "k-and-v",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AlignMode::None),
            "only-k" | "k_only" | "k" => Ok(AlignMode::KOnly),
            "only-v" | "v_only" | "v" => Ok(AlignMode::VOnly),
            "k-and-v" | "k_and_v" | "kv" => Ok(AlignMode::KAndV),
            other => Err(Error::InvalidConfig(format!("unknown align mode {other:?}"))),
        }
    }
}

/// Per-step buffer of key/value projections tagged by layer and domain.
/// Cleared at the start of every training step.
#[derive(Default)]
pub struct KeyCollector {
    current_domain: Option<usize>,
    entries: Vec<(usize, usize, Node, Node)>, // (layer, domain, k, v)
}

impl KeyCollector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.current_domain = None;
    }

    /// Tag subsequent deposits with the sample's domain.
    pub fn begin_sample(&mut self, domain_id: usize) {
        self.current_domain = Some(domain_id);
    }

    pub fn deposit(&mut self, layer: usize, k: Node, v: Node) {
        let domain = self
            .current_domain
            .expect("begin_sample must precede deposit");
        self.entries.push((layer, domain, k, v));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn grouped(&self, use_v: bool) -> BTreeMap<usize, BTreeMap<usize, Vec<Node>>> {
        let mut by_layer: BTreeMap<usize, BTreeMap<usize, Vec<Node>>> = BTreeMap::new();
        for (layer, domain, k, v) in &self.entries {
            by_layer
                .entry(*layer)
                .or_default()
                .entry(*domain)
                .or_default()
                .push(if use_v { v.clone() } else { k.clone() });
        }
        by_layer
    }

    /// Eq.-5 loss over one feature kind, averaged across layers.
    fn alignment_over(&self, use_v: bool) -> Result<Node> {
        let by_layer = self.grouped(use_v);
        if by_layer.is_empty() {
            return Ok(Node::scalar(0.0));
        }
        let mut layer_losses: Vec<Node> = Vec::new();
        for (_layer, by_domain) in by_layer {
            let mut stats: Vec<(Node, Node)> = Vec::new();
            for (_domain, mats) in by_domain {
                let pooled = Node::concat0(&mats)?;
                stats.push(key_stats(&pooled)?);
            }
            layer_losses.push(cd_kda_loss(&stats)?);
        }
        let n = layer_losses.len() as f64;
        let mut total = layer_losses[0].clone();
        for l in &layer_losses[1..] {
            total = total.add(l)?;
        }
        Ok(total.mul_scalar(1.0 / n))
    }

    /// Alignment objective for the configured mode; `None` is a constant 0.
    pub fn alignment_target(&self, mode: AlignMode) -> Result<Node> {
        match mode {
            AlignMode::None => Ok(Node::scalar(0.0)),
            AlignMode::KOnly => self.alignment_over(false),
            AlignMode::VOnly => self.alignment_over(true),
            AlignMode::KAndV => self.alignment_over(false)?.add(&self.alignment_over(true)?),
        }
    }
}
