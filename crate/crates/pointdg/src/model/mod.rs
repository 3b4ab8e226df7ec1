//! The end-to-end classifier: point embedding, Morton token ordering, a
//! four-stage hierarchy of RWKV blocks with farthest-point downsampling
//! between stages, mean+max pooling, and a linear head.

pub mod fps;
pub mod morton;
pub mod pool;

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::Path;

use crate::agt::{agt_shift, knn_shift, AgtConfig, KnnStrategy};
use crate::autodiff::Node;
use crate::checkpoint;
use crate::data::PointCloud;
use crate::error::{Error, Result};
use crate::losses::{AlignMode, KeyCollector};
use crate::rng::Rng;
use crate::rwkv::{
    channel_mix, layer_norm, q_shift, spatial_mix, ChannelMixParams, SpatialMixParams,
    DEFAULT_OFFSETS,
};
use crate::tensor::Tensor;

use fps::farthest_point_sample;
use morton::{gather_rows, morton_order};
use pool::segment_max;

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftMode {
    QShift,
    Agt,
    KnnRandOne,
    KnnAvg,
    KnnWAvg,
}

impl ShiftMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftMode::QShift => "qshift",
            ShiftMode::Agt => "agt",
            ShiftMode::KnnRandOne => "knn-randone",
            ShiftMode::KnnAvg => "knn-avg",
            ShiftMode::KnnWAvg => "knn-wavg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "qshift" => Ok(ShiftMode::QShift),
            "agt" => Ok(ShiftMode::Agt),
            "knn-randone" => Ok(ShiftMode::KnnRandOne),
            "knn-avg" => Ok(ShiftMode::KnnAvg),
            "knn-wavg" => Ok(ShiftMode::KnnWAvg),
            other => Err(Error::InvalidConfig(format!("unknown shift mode {other:?}"))),
        }
    }

    fn code(&self) -> f64 {
        match self {
            ShiftMode::QShift => 0.0,
            ShiftMode::Agt => 1.0,
            ShiftMode::KnnRandOne => 2.0,
            ShiftMode::KnnAvg => 3.0,
            ShiftMode::KnnWAvg => 4.0,
        }
    }

    fn from_code(c: f64) -> Result<Self> {
        match c as i64 {
            0 => Ok(ShiftMode::QShift),
            1 => Ok(ShiftMode::Agt),
            2 => Ok(ShiftMode::KnnRandOne),
            3 => Ok(ShiftMode::KnnAvg),
            4 => Ok(ShiftMode::KnnWAvg),
            _ => Err(Error::CheckpointCorrupt(format!("shift mode code {c}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub stage_blocks: Vec<usize>,
    pub stage_widths: Vec<usize>,
    pub stage_points: Vec<usize>,
    pub num_classes: usize,
    pub shift_mode: ShiftMode,
    pub align_mode: AlignMode,
    pub agt: AgtConfig,
    /// Replace the channel-mix shift too (not only spatial-mix) when running
    /// a geometric shift mode.
    pub agt_in_channel_mix: bool,
    pub knn_k: usize,
    pub ffn_expansion: usize,
}

impl ModelConfig {
    /// Default desk-scale configuration (1024-point input).
    pub fn standard() -> Self {
        ModelConfig {
            stage_blocks: vec![1, 1, 2, 2],
            stage_widths: vec![32, 64, 128, 128],
            stage_points: vec![512, 256, 128, 64],
            num_classes: 5,
            shift_mode: ShiftMode::Agt,
            align_mode: AlignMode::KOnly,
            agt: AgtConfig::default(),
            agt_in_channel_mix: true,
            knn_k: 16,
            ffn_expansion: 4,
        }
    }

    /// Half the block count per stage.
    pub fn base() -> Self {
        ModelConfig {
            stage_blocks: vec![1, 1, 1, 1],
            ..Self::standard()
        }
    }

    /// Wider features, denser sampling.
    pub fn large() -> Self {
        ModelConfig {
            stage_widths: vec![48, 96, 192, 192],
            stage_points: vec![768, 384, 192, 96],
            ..Self::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.stage_blocks.len();
        if s == 0 || self.stage_widths.len() != s || self.stage_points.len() != s {
            return Err(Error::InvalidConfig(
                "stage lists must be non-empty and equal length".into(),
            ));
        }
        if self.stage_widths.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("widths must be nondecreasing".into()));
        }
        if self.stage_points.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::InvalidConfig("points must be nonincreasing".into()));
        }
        if self.stage_widths.iter().any(|&w| w % 4 != 0 || w == 0) {
            return Err(Error::InvalidConfig(
                "stage widths must be positive multiples of 4".into(),
            ));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if self.ffn_expansion == 0 || self.knn_k == 0 {
            return Err(Error::InvalidConfig("expansion and knn_k must be >= 1".into()));
        }
        self.agt.validate()
    }

    /// Learnable parameter count, derived from the configuration alone.
    pub fn param_count(&self) -> usize {
        let c0 = self.stage_widths[0];
        let mut total = 3 * c0 + c0 + c0 * c0 + c0; // embed
        for (s, (&c, &_p)) in self
            .stage_widths
            .iter()
            .zip(&self.stage_points)
            .enumerate()
        {
            let c_prev = if s == 0 { c0 } else { self.stage_widths[s - 1] };
            total += c_prev * c; // downsample projection
            let h = self.ffn_expansion * c;
            let per_block = 2 * c               // ln1
                + c + 4 * c * c + c + c         // att: mu, wr/wk/wv/wo, decay, bias
                + 2 * c                         // ln2
                + c + c * c + c * h + h * c; // ffn: mu, wr, wk, wv
            total += self.stage_blocks[s] * per_block;
        }
        let c_last = *self.stage_widths.last().expect("validated");
        total += 2 * c_last; // final norm
        total += 2 * c_last * self.num_classes + self.num_classes; // head
        total
    }
}

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

pub struct ModelState {
    pub config: ModelConfig,
    pub seed: u64,
    params: Vec<(String, Node)>,
    by_name: HashMap<String, usize>,
}

impl ModelState {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::derive(seed, &[0x6d6f64656c]);
        let mut params: Vec<(String, Node)> = Vec::new();
        let push = |name: String, t: Tensor, params: &mut Vec<(String, Node)>| {
            params.push((name, Node::leaf(t)));
        };
        let normal = |shape: &[usize], scale: f64, rng: &mut Rng| -> Tensor {
            let n: usize = shape.iter().product();
            Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal() * scale).collect())
                .expect("counted")
        };
        let linspace01 = |c: usize| -> Tensor {
            if c == 1 {
                Tensor::from_vec(vec![0.5])
            } else {
                Tensor::from_vec((0..c).map(|i| i as f64 / (c - 1) as f64).collect())
            }
        };

        let c0 = config.stage_widths[0];
        push("embed.w1".into(), normal(&[3, c0], (3.0f64).sqrt().recip(), &mut rng), &mut params);
        push("embed.b1".into(), Tensor::zeros(&[c0]), &mut params);
        push("embed.w2".into(), normal(&[c0, c0], (c0 as f64).sqrt().recip(), &mut rng), &mut params);
        push("embed.b2".into(), Tensor::zeros(&[c0]), &mut params);

        for s in 0..config.stage_blocks.len() {
            let c = config.stage_widths[s];
            let c_prev = if s == 0 { c0 } else { config.stage_widths[s - 1] };
            push(
                format!("down{s}.w"),
                normal(&[c_prev, c], (c_prev as f64).sqrt().recip(), &mut rng),
                &mut params,
            );
            let h = config.ffn_expansion * c;
            let sc = (c as f64).sqrt().recip();
            for b in 0..config.stage_blocks[s] {
                let pre = format!("s{s}.b{b}");
                push(format!("{pre}.ln1.g"), Tensor::full(&[c], 1.0), &mut params);
                push(format!("{pre}.ln1.b"), Tensor::zeros(&[c]), &mut params);
                push(format!("{pre}.att.mu"), Tensor::full(&[c], 0.5), &mut params);
                push(format!("{pre}.att.wr"), normal(&[c, c], sc, &mut rng), &mut params);
                push(format!("{pre}.att.wk"), normal(&[c, c], sc, &mut rng), &mut params);
                push(format!("{pre}.att.wv"), normal(&[c, c], sc, &mut rng), &mut params);
                // small output projection: blocks start near-identity
                push(format!("{pre}.att.wo"), normal(&[c, c], 0.1 * sc, &mut rng), &mut params);
                push(format!("{pre}.att.decay"), linspace01(c), &mut params);
                push(format!("{pre}.att.bias"), Tensor::zeros(&[c]), &mut params);
                push(format!("{pre}.ln2.g"), Tensor::full(&[c], 1.0), &mut params);
                push(format!("{pre}.ln2.b"), Tensor::zeros(&[c]), &mut params);
                push(format!("{pre}.ffn.mu"), Tensor::full(&[c], 0.5), &mut params);
                push(format!("{pre}.ffn.wr"), normal(&[c, c], sc, &mut rng), &mut params);
                push(
                    format!("{pre}.ffn.wk"),
                    normal(&[c, h], sc, &mut rng),
                    &mut params,
                );
                push(
                    format!("{pre}.ffn.wv"),
                    normal(&[h, c], 0.1 / (h as f64).sqrt(), &mut rng),
                    &mut params,
                );
            }
        }
        let c_last = *config.stage_widths.last().expect("validated");
        push("norm_out.g".into(), Tensor::full(&[c_last], 1.0), &mut params);
        push("norm_out.b".into(), Tensor::zeros(&[c_last]), &mut params);
        // small head keeps the fresh-model loss at chance level
        push(
            "head.w".into(),
            normal(
                &[2 * c_last, config.num_classes],
                0.1 / (2.0 * c_last as f64).sqrt(),
                &mut rng,
            ),
            &mut params,
        );
        push("head.b".into(), Tensor::zeros(&[config.num_classes]), &mut params);

        let by_name = params
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect();
        Ok(ModelState {
            config,
            seed,
            params,
            by_name,
        })
    }

    pub fn get(&self, name: &str) -> &Node {
        let idx = self.by_name[name];
        &self.params[idx].1
    }

    pub fn params(&self) -> &[(String, Node)] {
        &self.params
    }

    pub fn param_nodes(&self) -> Vec<Node> {
        self.params.iter().map(|(_, n)| n.clone()).collect()
    }

    pub fn zero_grads(&self) {
        for (_, p) in &self.params {
            p.zero_grad();
        }
    }

    /// Project the shift mix coefficients back into [0, 1] after an
    /// optimizer step.
    pub fn clamp_mix_coeffs(&self) {
        for (name, p) in &self.params {
            if name.ends_with(".mu") {
                p.update_value(|t| {
                    for x in t.data_mut() {
                        *x = x.clamp(0.0, 1.0);
                    }
                });
            }
        }
    }

    pub fn actual_param_count(&self) -> usize {
        self.params.iter().map(|(_, p)| p.value().len()).sum()
    }

    /// Deep copy of all parameter values (for best-checkpoint tracking).
    pub fn snapshot_values(&self) -> Vec<Tensor> {
        self.params.iter().map(|(_, p)| p.value_clone()).collect()
    }

    pub fn restore_values(&self, values: &[Tensor]) {
        assert_eq!(values.len(), self.params.len());
        for ((_, p), v) in self.params.iter().zip(values) {
            p.set_value(v.clone());
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut entries = encode_config(&self.config, self.seed);
        for (name, p) in &self.params {
            entries.push((name.clone(), p.value_clone()));
        }
        checkpoint::save(path, &entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let entries = checkpoint::load(path)?;
        let (config, seed) = decode_config(&entries)?;
        let state = ModelState::init(config, seed)?;
        let mut seen = 0usize;
        for (name, tensor) in &entries {
            if name.starts_with("conf.") {
                continue;
            }
            let idx = *state.by_name.get(name).ok_or_else(|| {
                Error::CheckpointMismatch(format!("unknown parameter {name:?}"))
            })?;
            let p = &state.params[idx].1;
            if p.shape() != tensor.shape() {
                return Err(Error::CheckpointMismatch(format!(
                    "parameter {name:?} has shape {:?}, config expects {:?}",
                    tensor.shape(),
                    p.shape()
                )));
            }
            p.set_value(tensor.clone());
            seen += 1;
        }
        if seen != state.params.len() {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint holds {seen} of {} parameters",
                state.params.len()
            )));
        }
        Ok(state)
    }
}

fn encode_config(cfg: &ModelConfig, seed: u64) -> Vec<(String, Tensor)> {
    let as_vec = |xs: &[usize]| Tensor::from_vec(xs.iter().map(|&x| x as f64).collect());
    vec![
        ("conf.stage_blocks".into(), as_vec(&cfg.stage_blocks)),
        ("conf.stage_widths".into(), as_vec(&cfg.stage_widths)),
        ("conf.stage_points".into(), as_vec(&cfg.stage_points)),
        ("conf.num_classes".into(), Tensor::scalar(cfg.num_classes as f64)),
        ("conf.shift_mode".into(), Tensor::scalar(cfg.shift_mode.code())),
        (
            "conf.align_mode".into(),
            Tensor::scalar(match cfg.align_mode {
                AlignMode::None => 0.0,
                AlignMode::KOnly => 1.0,
                AlignMode::VOnly => 2.0,
                AlignMode::KAndV => 3.0,
            }),
        ),
        (
            "conf.agt".into(),
            Tensor::from_vec(vec![
                cfg.agt.h,
                cfg.agt.lambda,
                cfg.agt.c_prime.map_or(-1.0, |c| c as f64),
            ]),
        ),
        (
            "conf.agt_in_channel_mix".into(),
            Tensor::scalar(if cfg.agt_in_channel_mix { 1.0 } else { 0.0 }),
        ),
        ("conf.knn_k".into(), Tensor::scalar(cfg.knn_k as f64)),
        ("conf.ffn_expansion".into(), Tensor::scalar(cfg.ffn_expansion as f64)),
        ("conf.seed".into(), Tensor::scalar(seed as f64)),
    ]
}

fn decode_config(entries: &[(String, Tensor)]) -> Result<(ModelConfig, u64)> {
    let find = |name: &str| -> Result<&Tensor> {
        entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::CheckpointCorrupt(format!("missing {name:?}")))
    };
    let to_usizes = |t: &Tensor| -> Vec<usize> { t.data().iter().map(|&x| x as usize).collect() };
    let agt_raw = find("conf.agt")?;
    if agt_raw.len() != 3 {
        return Err(Error::CheckpointCorrupt("conf.agt must have 3 entries".into()));
    }
    let config = ModelConfig {
        stage_blocks: to_usizes(find("conf.stage_blocks")?),
        stage_widths: to_usizes(find("conf.stage_widths")?),
        stage_points: to_usizes(find("conf.stage_points")?),
        num_classes: find("conf.num_classes")?.item() as usize,
        shift_mode: ShiftMode::from_code(find("conf.shift_mode")?.item())?,
        align_mode: match find("conf.align_mode")?.item() as i64 {
            0 => AlignMode::None,
            1 => AlignMode::KOnly,
            2 => AlignMode::VOnly,
            3 => AlignMode::KAndV,
            c => return Err(Error::CheckpointCorrupt(format!("align mode code {c}"))),
        },
        agt: AgtConfig {
            h: agt_raw.data()[0],
            lambda: agt_raw.data()[1],
            c_prime: if agt_raw.data()[2] < 0.0 {
                None
            } else {
                Some(agt_raw.data()[2] as usize)
            },
        },
        agt_in_channel_mix: find("conf.agt_in_channel_mix")?.item() != 0.0,
        knn_k: find("conf.knn_k")?.item() as usize,
        ffn_expansion: find("conf.ffn_expansion")?.item() as usize,
    };
    let seed = find("conf.seed")?.item() as u64;
    Ok((config, seed))
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

pub struct ForwardOutput {
    /// Unnormalized class scores, shape [K].
    pub logits: Node,
    /// Pre-head pooled embedding, shape [2C].
    pub pooled: Node,
}

/// Center to the centroid and scale to the unit sphere so the Morton
/// quantizer sees in-range coordinates regardless of input scaling.
fn normalize_coords(coords: &Tensor) -> Result<Tensor> {
    let n = coords.rows();
    let mut c = [0.0f64; 3];
    for i in 0..n {
        let p = coords.row(i);
        c[0] += p[0];
        c[1] += p[1];
        c[2] += p[2];
    }
    for v in &mut c {
        *v /= n as f64;
    }
    let mut data = Vec::with_capacity(n * 3);
    let mut max_r: f64 = 0.0;
    for i in 0..n {
        let p = coords.row(i);
        let q = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        max_r = max_r.max((q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt());
        data.extend_from_slice(&q);
    }
    if max_r == 0.0 {
        return Err(Error::DegenerateCloud);
    }
    for x in &mut data {
        *x /= max_r;
    }
    Tensor::new(vec![n, 3], data)
}

/// FPS + nearest-anchor partition + per-segment max + linear projection.
/// Anchors are re-sorted ascending so the Morton sequence order survives
/// downsampling.
fn downsample(coords: &Tensor, x: &Node, m: usize, proj: &Node) -> Result<(Tensor, Node)> {
    let n = coords.rows();
    let mut anchors = farthest_point_sample(coords, m)?;
    anchors.sort_unstable();
    let mut segment = vec![usize::MAX; n];
    for (seg, &a) in anchors.iter().enumerate() {
        segment[a] = seg; // anchors own their segment even under coincidence
    }
    for (i, slot) in segment.iter_mut().enumerate() {
        if *slot != usize::MAX {
            continue;
        }
        let p = coords.row(i);
        let mut best = 0usize;
        let mut best_d2 = f64::INFINITY;
        for (seg, &a) in anchors.iter().enumerate() {
            let q = coords.row(a);
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = seg;
            }
        }
        *slot = best;
    }
    let pooled = segment_max(x, &segment, m)?;
    Ok((gather_rows(coords, &anchors), pooled.matmul(proj)?))
}

/// Full forward pass. When `collector` is supplied, every spatial-mix layer
/// deposits its k and v projections tagged with the sample's domain; the
/// caller must have called [`KeyCollector::begin_sample`].
pub fn forward(
    cloud: &PointCloud,
    state: &ModelState,
    mut collector: Option<&mut KeyCollector>,
    rng: &mut Rng,
) -> Result<ForwardOutput> {
    let cfg = &state.config;
    let normalized = normalize_coords(&cloud.coords)?;
    let order = morton_order(&normalized)?;
    let ordered = gather_rows(&normalized, &order);

    // per-point embedding
    let coords_node = Node::leaf(ordered.clone());
    let h1 = coords_node
        .matmul(state.get("embed.w1"))?
        .add(state.get("embed.b1"))?
        .relu();
    let mut x = h1
        .matmul(state.get("embed.w2"))?
        .add(state.get("embed.b2"))?;
    let mut coords_cur = ordered;

    let rng_cell = RefCell::new(rng);
    let mut layer_id = 0usize;
    for s in 0..cfg.stage_blocks.len() {
        let m = cfg.stage_points[s].min(coords_cur.rows());
        let proj = state.get(&format!("down{s}.w"));
        let (c2, x2) = downsample(&coords_cur, &x, m, proj)?;
        coords_cur = c2;
        x = x2;
        let c = cfg.stage_widths[s];
        let c_prime = cfg.agt.c_prime_for(c);
        for b in 0..cfg.stage_blocks[s] {
            let pre = format!("s{s}.b{b}");
            let att = SpatialMixParams {
                wr: state.get(&format!("{pre}.att.wr")).clone(),
                wk: state.get(&format!("{pre}.att.wk")).clone(),
                wv: state.get(&format!("{pre}.att.wv")).clone(),
                wo: state.get(&format!("{pre}.att.wo")).clone(),
                decay: state.get(&format!("{pre}.att.decay")).clone(),
                bias: state.get(&format!("{pre}.att.bias")).clone(),
                mu: state.get(&format!("{pre}.att.mu")).clone(),
            };
            let ffn = ChannelMixParams {
                wr: state.get(&format!("{pre}.ffn.wr")).clone(),
                wk: state.get(&format!("{pre}.ffn.wk")).clone(),
                wv: state.get(&format!("{pre}.ffn.wv")).clone(),
                mu: state.get(&format!("{pre}.ffn.mu")).clone(),
            };
            let geometric = |n: &Node| -> Result<Node> {
                match cfg.shift_mode {
                    ShiftMode::QShift => unreachable!("guarded by caller"),
                    ShiftMode::Agt => agt_shift(n, &coords_cur, &cfg.agt),
                    ShiftMode::KnnRandOne | ShiftMode::KnnAvg | ShiftMode::KnnWAvg => {
                        let strategy = match cfg.shift_mode {
                            ShiftMode::KnnRandOne => KnnStrategy::RandOne,
                            ShiftMode::KnnAvg => KnnStrategy::Avg,
                            _ => KnnStrategy::WAvg,
                        };
                        let k = cfg.knn_k.min(coords_cur.rows().saturating_sub(1)).max(1);
                        knn_shift(
                            n,
                            &coords_cur,
                            k,
                            strategy,
                            cfg.agt.lambda,
                            c_prime,
                            &mut rng_cell.borrow_mut(),
                        )
                    }
                }
            };
            let spatial_shift = |n: &Node| -> Result<Node> {
                if cfg.shift_mode == ShiftMode::QShift {
                    q_shift(n, &att.mu, DEFAULT_OFFSETS)
                } else {
                    geometric(n)
                }
            };
            let channel_shift = |n: &Node| -> Result<Node> {
                if cfg.shift_mode == ShiftMode::QShift || !cfg.agt_in_channel_mix {
                    q_shift(n, &ffn.mu, DEFAULT_OFFSETS)
                } else {
                    geometric(n)
                }
            };

            let normed = layer_norm(
                &x,
                state.get(&format!("{pre}.ln1.g")),
                state.get(&format!("{pre}.ln1.b")),
                LN_EPS,
            )?;
            let (att_out, k_proj, v_proj) = spatial_mix(&normed, &att, &spatial_shift)?;
            if let Some(ref mut coll) = collector {
                coll.deposit(layer_id, k_proj, v_proj);
            }
            x = x.add(&att_out)?;

            let normed2 = layer_norm(
                &x,
                state.get(&format!("{pre}.ln2.g")),
                state.get(&format!("{pre}.ln2.b")),
                LN_EPS,
            )?;
            let ffn_out = channel_mix(&normed2, &ffn, &channel_shift)?;
            x = x.add(&ffn_out)?;
            layer_id += 1;
        }
    }

    let xn = layer_norm(&x, state.get("norm_out.g"), state.get("norm_out.b"), LN_EPS)?;
    let mean = xn.mean(Some(0), false)?;
    let max = xn.max(Some(0), false)?;
    let pooled = Node::concat0(&[mean, max])?;
    let c_last = *cfg.stage_widths.last().expect("validated");
    let logits = pooled
        .reshape(&[1, 2 * c_last])?
        .matmul(state.get("head.w"))?
        .add(state.get("head.b"))?
        .reshape(&[cfg.num_classes])?;
    Ok(ForwardOutput { logits, pooled })
}

/// Argmax class, lowest index on ties. No source data or adaptation is used.
pub fn predict(cloud: &PointCloud, state: &ModelState, rng: &mut Rng) -> Result<usize> {
    let out = forward(cloud, state, None, rng)?;
    let v = out.logits.value_clone();
    let mut best = 0usize;
    for (i, &x) in v.data().iter().enumerate() {
        if x > v.data()[best] {
            best = i;
        }
    }
    Ok(best)
}
