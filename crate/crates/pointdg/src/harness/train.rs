//! Training loop: equal-per-domain batches, total objective, AdamW with a
//! cosine schedule, best-source-validation checkpointing.

use std::fmt::Write as _;
use std::time::Instant;

use crate::autodiff::Node;
use crate::data::{preprocess, DatasetStore, Split};
use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::losses::{cross_entropy, total_loss, KeyCollector};
use crate::model::{forward, predict, ModelState};
use crate::optim::{cosine_lr, AdamW};
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct EpochStats {
    pub cls_loss: f64,
    pub kda_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub task: usize,
    pub seed: u64,
    pub epochs: Vec<EpochStats>,
    pub best_val_acc: f64,
    pub target_acc: Option<f64>,
    pub wall_secs: f64,
    pub param_count: usize,
    pub flops_per_cloud: u64,
}

impl RunReport {
    pub fn epochs_csv(&self) -> String {
        let mut s = String::from("epoch,cls_loss,kda_loss,val_acc\n");
        for (i, e) in self.epochs.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", i, e.cls_loss, e.kda_loss, e.val_acc);
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("task,seed,target_acc,best_val_acc,wall_secs,params,flops\n");
        let _ = writeln!(
            s,
            "{},{},{},{},{:.3},{},{}",
            self.task,
            self.seed,
            self.target_acc.map_or(String::from("-"), |a| a.to_string()),
            self.best_val_acc,
            self.wall_secs,
            self.param_count,
            self.flops_per_cloud
        );
        s
    }

    pub fn summary_text(&self) -> String {
        format!(
            "task {} seed {}: best source-val {:.4}{} | {:.1}s, {} params, ~{} FLOPs/cloud\n",
            self.task,
            self.seed,
            self.best_val_acc,
            self.target_acc
                .map_or(String::new(), |a| format!(", target {a:.4}")),
            self.wall_secs,
            self.param_count,
            self.flops_per_cloud
        )
    }
}

pub struct TrainResult {
    pub state: ModelState,
    pub report: RunReport,
}

/// Analytic forward cost for one cloud (mul-add = 2 FLOPs), from the config.
pub fn forward_flops(cfg: &crate::model::ModelConfig, input_points: usize) -> u64 {
    let c0 = cfg.stage_widths[0] as u64;
    let n0 = input_points as u64;
    let mut total = 2 * n0 * 3 * c0 + 2 * n0 * c0 * c0; // embed
    for s in 0..cfg.stage_blocks.len() {
        let t = cfg.stage_points[s].min(input_points) as u64;
        let c = cfg.stage_widths[s] as u64;
        let c_prev = if s == 0 {
            c0
        } else {
            cfg.stage_widths[s - 1] as u64
        };
        total += 2 * t * c_prev * c; // downsample projection
        let h = (cfg.ffn_expansion as u64) * c;
        let per_block = 8 * t * c                  // norms
            + 8 * t * c                            // shift
            + 4 * 2 * t * c * c                    // r/k/v/out projections
            + super::bench::biwkv_flops(t as usize, c as usize)
            + 3 * t * c                            // gating
            + 2 * t * c * c                        // ffn wr
            + 2 * t * c * h + 2 * t * h * c + 2 * t * h; // ffn body
        total += cfg.stage_blocks[s] as u64 * per_block;
    }
    total
}

/// Accuracy of the current parameters over a sample list (eval-mode
/// preprocessing, deterministic).
pub fn accuracy_over(
    state: &ModelState,
    samples: &[&crate::data::PointCloud],
    rng_seed: u64,
) -> Result<f64> {
    let mut correct = 0usize;
    for (i, cloud) in samples.iter().enumerate() {
        let mut rng = Rng::derive(rng_seed, &[i as u64]);
        let pre = preprocess(cloud, false, &mut rng)?;
        if predict(&pre, state, &mut rng)? == cloud.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Run the full training loop for one leave-one-out task. Reads only source
/// domains; the returned state carries the best-validation parameters.
pub fn train(cfg: &RunConfig, store: &DatasetStore) -> Result<TrainResult> {
    cfg.validate()?;
    let started = Instant::now();
    let sources: Vec<usize> = (0..store.num_domains()).filter(|&d| d != cfg.task).collect();
    let state = ModelState::init(cfg.model.clone(), cfg.seed)?;
    let params = state.param_nodes();
    let mut opt = AdamW::new(&params, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
    let mut rng = Rng::derive(cfg.seed, &[cfg.task as u64, 0x747261696e]);

    let train_len = store.split_len(Split::Train);
    let steps_per_epoch = (train_len / cfg.batch_per_domain).max(1);
    let total_steps = cfg.epochs * steps_per_epoch;

    let mut collector = KeyCollector::new();
    let mut epochs: Vec<EpochStats> = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::NEG_INFINITY;
    let mut best_values: Option<Vec<crate::tensor::Tensor>> = None;
    let mut global_step = 0usize;

    // per-domain shuffled index orders, refreshed each epoch
    for _epoch in 0..cfg.epochs {
        let mut orders: Vec<Vec<usize>> = sources
            .iter()
            .map(|_| (0..train_len).collect::<Vec<usize>>())
            .collect();
        for order in &mut orders {
            rng.shuffle(order);
        }
        let mut cls_sum = 0.0;
        let mut kda_sum = 0.0;
        for step in 0..steps_per_epoch {
            state.zero_grads();
            collector.clear();
            let mut logit_rows: Vec<Node> = Vec::new();
            let mut labels: Vec<usize> = Vec::new();
            for (si, &domain) in sources.iter().enumerate() {
                for j in 0..cfg.batch_per_domain {
                    let flat = orders[si][(step * cfg.batch_per_domain + j) % train_len];
                    let class = flat / store.manifest.train_per_class;
                    let index = flat % store.manifest.train_per_class;
                    let cloud = store.get(domain, Split::Train, class, index);
                    let pre = preprocess(cloud, true, &mut rng)?;
                    collector.begin_sample(domain);
                    let out = forward(&pre, &state, Some(&mut collector), &mut rng)?;
                    logit_rows.push(out.logits);
                    labels.push(cloud.label);
                }
            }
            let logits = Node::stack_rows(&logit_rows)?;
            let cls = cross_entropy(&logits, &labels)?;
            // a zero-weighted alignment term is dead work and would only
            // perturb gradient accumulation order
            let kda = if cfg.lambda2 == 0.0 {
                Node::scalar(0.0)
            } else {
                collector.alignment_target(cfg.model.align_mode)?
            };
            let loss = total_loss(&cls, &kda, cfg.lambda1, cfg.lambda2)?;
            loss.backward()?;
            let lr = cosine_lr(global_step, total_steps, cfg.lr, cfg.lr_min)?;
            opt.step(&params, lr);
            state.clamp_mix_coeffs();
            cls_sum += cls.item();
            kda_sum += kda.item();
            global_step += 1;
        }

        // source-validation accuracy decides the checkpoint
        let mut val_correct = 0usize;
        let mut val_total = 0usize;
        for &domain in &sources {
            let samples = store.split_samples(domain, Split::Val);
            let acc = accuracy_over(&state, &samples, cfg.seed ^ 0x76616c)?;
            val_correct += (acc * samples.len() as f64).round() as usize;
            val_total += samples.len();
        }
        let val_acc = val_correct as f64 / val_total as f64;
        if val_acc > best_val {
            best_val = val_acc;
            best_values = Some(state.snapshot_values());
        }
        epochs.push(EpochStats {
            cls_loss: cls_sum / steps_per_epoch as f64,
            kda_loss: kda_sum / steps_per_epoch as f64,
            val_acc,
        });
    }

    if let Some(values) = best_values {
        state.restore_values(&values);
    }
    let report = RunReport {
        task: cfg.task,
        seed: cfg.seed,
        epochs,
        best_val_acc: best_val,
        target_acc: None,
        wall_secs: started.elapsed().as_secs_f64(),
        param_count: state.actual_param_count(),
        flops_per_cloud: forward_flops(&cfg.model, store.manifest.points_per_cloud),
    };
    Ok(TrainResult { state, report })
}
