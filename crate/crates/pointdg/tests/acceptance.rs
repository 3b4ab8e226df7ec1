//! Acceptance suite. One test per criterion; each prints a `PASS criterion N`
//! line with the measured numbers. Heavy criteria share a global cell cache
//! and a mutex so timing-sensitive measurements do not contend.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use pointdg::agt::{agt_shift, agt_weights, build_grid, AgtConfig};
use pointdg::autodiff::Node;
use pointdg::data::{DatasetStore, Manifest, Split};
use pointdg::gradcheck::{grads_close, GradCheck};
use pointdg::harness::ablate::{run_cell, table_from_cells, Suite};
use pointdg::harness::bench;
use pointdg::harness::config::RunConfig;
use pointdg::harness::train;
use pointdg::losses::{
    cd_kda_loss, cd_kda_loss_tensor, cross_entropy, key_stats, key_stats_tensor, total_loss,
    AlignMode, KeyCollector, KeyStats,
};
use pointdg::model::{forward, ModelConfig, ModelState, ShiftMode};
use pointdg::optim::cosine_lr;
use pointdg::rng::Rng;
use pointdg::rwkv::{bi_wkv_linear, bi_wkv_node, bi_wkv_quadratic, q_shift, DEFAULT_OFFSETS};
use pointdg::tensor::Tensor;

// ---------------------------------------------------------------------------
// shared infrastructure
// ---------------------------------------------------------------------------

/// Serializes the criteria so wall-clock measurements are not distorted by a
/// concurrently training sibling test.
fn suite_lock() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn experiment_manifest() -> Manifest {
    Manifest {
        points_per_cloud: 192,
        train_per_class: 16,
        val_per_class: 4,
        test_per_class: 8,
        seed: 7,
        ..Default::default()
    }
}

fn experiment_store() -> &'static DatasetStore {
    static STORE: OnceLock<DatasetStore> = OnceLock::new();
    STORE.get_or_init(|| DatasetStore::generate(&experiment_manifest()).expect("generate"))
}

/// Desk-scale training configuration for the ordering experiments.
fn experiment_run() -> RunConfig {
    RunConfig {
        task: 0,
        model: ModelConfig {
            stage_blocks: vec![1, 1, 2, 2],
            stage_widths: vec![16, 24, 32, 32],
            stage_points: vec![96, 48, 24, 12],
            num_classes: 5,
            shift_mode: ShiftMode::Agt,
            align_mode: AlignMode::KOnly,
            agt: AgtConfig {
                h: 0.8,
                lambda: 0.5,
                c_prime: None,
            },
            agt_in_channel_mix: true,
            knn_k: 12,
            ffn_expansion: 4,
        },
        lr: 0.01,
        lr_min: 5e-4,
        weight_decay: 1e-4,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
        epochs: 40,
        batch_per_domain: 2,
        lambda1: 1.0,
        lambda2: 0.3,
        seed: 0,
        data_dir: std::path::PathBuf::new(),
        out_dir: std::path::PathBuf::new(),
    }
}

type CellKey = (ShiftMode, AlignMode, usize, u64);

fn cell_cache() -> &'static Mutex<HashMap<CellKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CellKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Target accuracy of one (shift, align, task, seed) cell, trained on demand
/// and cached across criteria. Missing cells are computed in parallel.
fn cells(requests: &[CellKey]) -> HashMap<CellKey, f64> {
    use rayon::prelude::*;
    let store = experiment_store();
    let missing: Vec<CellKey> = {
        let cache = cell_cache().lock().unwrap();
        requests
            .iter()
            .filter(|k| !cache.contains_key(*k))
            .cloned()
            .collect()
    };
    if !missing.is_empty() {
        let computed: Vec<(CellKey, f64)> = missing
            .par_iter()
            .map(|&(shift, align, task, seed)| {
                let mut cfg = experiment_run();
                cfg.model.shift_mode = shift;
                cfg.model.align_mode = align;
                let acc = run_cell(&cfg, store, task, seed).expect("cell");
                ((shift, align, task, seed), acc)
            })
            .collect();
        let mut cache = cell_cache().lock().unwrap();
        for (k, v) in computed {
            cache.insert(k, v);
        }
    }
    let cache = cell_cache().lock().unwrap();
    requests.iter().map(|k| (*k, cache[k])).collect()
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn max_rel_dev(a: &Tensor, b: &Tensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| rel_dev(x, y))
        .fold(0.0, f64::max)
}

fn random_kv(
    t: usize,
    c: usize,
    bound: f64,
    rng: &mut Rng,
) -> (Tensor, Tensor, Vec<f64>, Vec<f64>) {
    let mk = |rng: &mut Rng| {
        Tensor::new(vec![t, c], (0..t * c).map(|_| rng.range(-bound, bound)).collect()).unwrap()
    };
    let k = mk(rng);
    let v = mk(rng);
    let w = (0..c).map(|_| rng.range(-bound, bound)).collect();
    let u = (0..c).map(|_| rng.range(-bound, bound)).collect();
    (k, v, w, u)
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_kernel_oracle_equivalence() {
    let _guard = suite_lock();
    let started = Instant::now();
    let t_values = [1usize, 2, 3, 7, 64, 257, 512];
    let mut rng = Rng::new(0xACCE1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    'outer: loop {
        for &t in &t_values {
            let c = 1 + rng.below(4);
            let (k, v, w, u) = random_kv(t, c, 5.0, &mut rng);
            let quad = bi_wkv_quadratic(&k, &v, &w, &u).unwrap();
            let lin = bi_wkv_linear(&k, &v, &w, &u).unwrap();
            worst = worst.max(max_rel_dev(&quad, &lin));
            cases += 1;
            if cases >= 1000 {
                break 'outer;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        worst <= 1e-10,
        "criterion 1 FAIL: max relative deviation {worst:.3e} > 1e-10"
    );
    assert!(elapsed < 30.0, "criterion 1 FAIL: took {elapsed:.1}s >= 30s");
    println!(
        "PASS criterion 1: linear vs quadratic kernel, {cases} cases, max rel dev {worst:.3e}, {elapsed:.1}s"
    );
}

#[test]
fn criterion_2_overflow_safety_and_shift_invariance() {
    let _guard = suite_lock();
    let mut rng = Rng::new(0xACCE2);
    let (t, c) = (64, 3);
    let mut worst_agree: f64 = 0.0;
    for &(k_off, u_val) in &[(80.0, 80.0), (-80.0, -80.0), (80.0, -80.0), (-80.0, 80.0)] {
        let (mut k, v, w, _) = random_kv(t, c, 2.0, &mut rng);
        // spike a few positions by the offset
        for pos in [3usize, 31, 60] {
            for ch in 0..c {
                k.data_mut()[pos * c + ch] += k_off;
            }
        }
        let u = vec![u_val; c];
        let quad = bi_wkv_quadratic(&k, &v, &w, &u).unwrap();
        let lin = bi_wkv_linear(&k, &v, &w, &u).unwrap();
        assert!(
            quad.all_finite() && lin.all_finite(),
            "criterion 2 FAIL: non-finite output at k offset {k_off}, u {u_val}"
        );
        worst_agree = worst_agree.max(max_rel_dev(&quad, &lin));
    }
    assert!(
        worst_agree <= 1e-8,
        "criterion 2 FAIL: kernel forms disagree {worst_agree:.3e} > 1e-8 under +-80 offsets"
    );
    // common exponent shift: k += 50 multiplies every term of the quotient
    // by e^50 and must leave the output unchanged (see decisions ledger on
    // the k,u double-shift wording)
    let (k, v, w, u) = random_kv(t, c, 2.0, &mut rng);
    let base = bi_wkv_linear(&k, &v, &w, &u).unwrap();
    let shifted = bi_wkv_linear(&k.map(|x| x + 50.0), &v, &w, &u).unwrap();
    let dev = max_rel_dev(&base, &shifted);
    assert!(
        dev <= 1e-8,
        "criterion 2 FAIL: exponent-shift invariance broken: {dev:.3e} > 1e-8"
    );
    println!(
        "PASS criterion 2: finite under +-80 offsets, forms agree {worst_agree:.3e}, shift invariance {dev:.3e}"
    );
}

#[test]
fn criterion_3_gradient_suite() {
    let _guard = suite_lock();
    let started = Instant::now();
    let gc = GradCheck {
        step: 1e-5,
        rel_tol: 1e-4,
        eps_abs: 1e-8,
    };
    let mut rng = Rng::new(0xACCE3);
    let rt = |shape: &[usize], lo: f64, hi: f64, rng: &mut Rng| {
        let n: usize = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.range(lo, hi)).collect()).unwrap()
    };

    // elementwise / matmul / reductions: >= 100 random inputs each
    let mut ops_checked = 0;
    for _ in 0..100 {
        let a = rt(&[3, 4], -2.0, 2.0, &mut rng);
        let b = rt(&[4], 0.4, 2.0, &mut rng);
        let pos = a.map(|x| x.abs() + 0.3);
        let away = a.map(|x| if x.abs() < 0.05 { x + 0.1 } else { x }); // off the relu kink
        gc.check(&[a.clone(), b.clone()], |l| l[0].add(&l[1])?.square().sum(None, false))
            .unwrap();
        gc.check(&[a.clone(), b.clone()], |l| l[0].sub(&l[1])?.square().sum(None, false))
            .unwrap();
        gc.check(&[a.clone(), b.clone()], |l| l[0].mul(&l[1])?.sum(None, false))
            .unwrap();
        gc.check(&[a.clone(), b.clone()], |l| l[0].div(&l[1])?.sum(None, false))
            .unwrap();
        gc.check(&[a.clone()], |l| l[0].exp().sum(None, false)).unwrap();
        gc.check(&[pos.clone()], |l| l[0].log()?.sum(None, false)).unwrap();
        gc.check(&[away], |l| l[0].relu().square().sum(None, false)).unwrap();
        gc.check(&[a.clone()], |l| l[0].sigmoid().sum(None, false)).unwrap();
        gc.check(&[a.clone()], |l| l[0].square().sum(None, false)).unwrap();
        gc.check(&[pos], |l| l[0].sqrt()?.sum(None, false)).unwrap();
        let m1 = rt(&[4, 3], -2.0, 2.0, &mut rng);
        let m2 = rt(&[3, 2], -2.0, 2.0, &mut rng);
        gc.check(&[m1.clone(), m2], |l| {
            l[0].matmul(&l[1])?.square().sum(None, false)
        })
        .unwrap();
        gc.check(&[m1.clone()], |l| l[0].transpose()?.square().sum(None, false))
            .unwrap();
        gc.check(&[m1.clone()], |l| l[0].sum(Some(0), false)?.square().sum(None, false))
            .unwrap();
        gc.check(&[m1.clone()], |l| l[0].mean(Some(1), true)?.square().sum(None, false))
            .unwrap();
        gc.check(&[m1.clone()], |l| l[0].max(Some(0), false)?.sum(None, false))
            .unwrap();
        gc.check(&[m1], |l| l[0].reshape(&[2, 6])?.square().sum(None, false))
            .unwrap();
        ops_checked += 16;
    }

    // kernel operations
    for _ in 0..20 {
        let (k, v, w, u) = random_kv(5, 2, 1.5, &mut rng);
        let mix = rt(&[5, 2], -1.0, 1.0, &mut rng);
        gc.check(&[k, v, Tensor::from_vec(w), Tensor::from_vec(u)], |l| {
            bi_wkv_node(&l[0], &l[1], &l[2], &l[3])?
                .mul(&Node::leaf(mix.clone()))?
                .sum(None, false)
        })
        .unwrap();
        let x = rt(&[6, 8], -1.5, 1.5, &mut rng);
        let mu = rt(&[8], 0.1, 0.9, &mut rng);
        gc.check(&[x, mu], |l| {
            q_shift(&l[0], &l[1], DEFAULT_OFFSETS)?.square().sum(None, false)
        })
        .unwrap();
        let coords = rt(&[12, 3], -1.0, 1.0, &mut rng);
        let f = rt(&[12, 4], -1.5, 1.5, &mut rng);
        let agt = AgtConfig {
            h: 0.5,
            ..Default::default()
        };
        gc.check(&[f.clone()], |l| {
            agt_shift(&l[0], &coords, &agt)?.square().sum(None, false)
        })
        .unwrap();
        let logits = rt(&[3, 5], -2.0, 2.0, &mut rng);
        gc.check(&[logits], |l| cross_entropy(&l[0], &[0, 2, 4])).unwrap();
        let keys_a = rt(&[4, 3], -1.5, 1.5, &mut rng);
        let keys_b = rt(&[4, 3], -1.5, 1.5, &mut rng);
        gc.check(&[keys_a, keys_b], |l| {
            cd_kda_loss(&[key_stats(&l[0])?, key_stats(&l[1])?])
        })
        .unwrap();
        ops_checked += 5;
    }

    // full model: total loss on a 2-sample / 2-domain batch at the tiny
    // config, every parameter element checked by central differences
    let tiny = ModelConfig {
        stage_blocks: vec![1, 1, 2, 2],
        stage_widths: vec![8, 8, 16, 16],
        stage_points: vec![32, 16, 8, 4],
        num_classes: 3,
        shift_mode: ShiftMode::Agt,
        align_mode: AlignMode::KOnly,
        agt: AgtConfig {
            h: 0.7,
            lambda: 0.5,
            c_prime: None,
        },
        agt_in_channel_mix: true,
        knn_k: 4,
        ffn_expansion: 2,
    };
    let state = ModelState::init(tiny, 77).unwrap();
    let mut gen = Rng::new(0xBA7C4);
    let clouds: Vec<pointdg::data::PointCloud> = (0..2)
        .map(|i| {
            let mut c = pointdg::data::generate_shape(i + 1, 64, &mut gen).unwrap();
            c.label = i;
            c.domain_id = i;
            pointdg::data::preprocess(&c, false, &mut Rng::new(i as u64)).unwrap()
        })
        .collect();
    let loss_of = |state: &ModelState| -> f64 {
        let mut collector = KeyCollector::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for cloud in &clouds {
            collector.begin_sample(cloud.domain_id);
            let out = forward(cloud, state, Some(&mut collector), &mut Rng::new(0)).unwrap();
            rows.push(out.logits);
            labels.push(cloud.label);
        }
        let cls = cross_entropy(&Node::stack_rows(&rows).unwrap(), &labels).unwrap();
        let kda = collector.alignment_target(AlignMode::KOnly).unwrap();
        total_loss(&cls, &kda, 1.0, 0.3).unwrap().item()
    };
    // analytic gradients
    state.zero_grads();
    {
        let mut collector = KeyCollector::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for cloud in &clouds {
            collector.begin_sample(cloud.domain_id);
            let out = forward(cloud, &state, Some(&mut collector), &mut Rng::new(0)).unwrap();
            rows.push(out.logits);
            labels.push(cloud.label);
        }
        let cls = cross_entropy(&Node::stack_rows(&rows).unwrap(), &labels).unwrap();
        let kda = collector.alignment_target(AlignMode::KOnly).unwrap();
        total_loss(&cls, &kda, 1.0, 0.3)
            .unwrap()
            .backward()
            .unwrap();
    }
    let h = 1e-4;
    let mut params_checked = 0;
    let mut worst = 0.0f64;
    for (name, p) in state.params() {
        let analytic = p.grad_clone();
        let len = analytic.len();
        for idx in 0..len {
            p.update_value(|t| t.data_mut()[idx] += h);
            let up = loss_of(&state);
            p.update_value(|t| t.data_mut()[idx] -= 2.0 * h);
            let down = loss_of(&state);
            p.update_value(|t| t.data_mut()[idx] += h);
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.data()[idx];
            assert!(
                grads_close(a, numeric, 1e-4, 1e-7),
                "criterion 3 FAIL: {name}[{idx}] analytic {a:.6e} vs numeric {numeric:.6e}"
            );
            let err = (a - numeric).abs() / (a.abs().max(numeric.abs()) + 1e-8);
            worst = worst.max(err);
        }
        params_checked += len;
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "criterion 3 FAIL: took {elapsed:.0}s >= 5 min");
    println!(
        "PASS criterion 3: {ops_checked} op checks + full model ({params_checked} parameters, worst rel err {worst:.2e}), {elapsed:.0}s"
    );
}

#[test]
fn criterion_4_agt_unit_truths() {
    let _guard = suite_lock();
    // singleton-cell identity, exact
    let mut rng = Rng::new(0xACCE4);
    let coords_far = Tensor::new(vec![5, 3], (0..15).map(|i| i as f64 * 4.0).collect()).unwrap();
    let f = Tensor::new(vec![5, 6], (0..30).map(|_| rng.range(-2.0, 2.0)).collect()).unwrap();
    let out = agt_shift(&Node::leaf(f.clone()), &coords_far, &AgtConfig::default())
        .unwrap()
        .value_clone();
    assert_eq!(out.data(), f.data(), "criterion 4 FAIL: singleton identity");

    // two-point equal-weight hand value to 1e-12
    let coords2 = Tensor::new(vec![2, 3], vec![0.02, 0.0, 0.0, 0.18, 0.0, 0.0]).unwrap();
    let f2 = Tensor::new(vec![2, 2], vec![1.0, 2.0, 5.0, 10.0]).unwrap();
    let cfg2 = AgtConfig {
        h: 1.0,
        lambda: 0.5,
        c_prime: Some(2),
    };
    let out2 = agt_shift(&Node::leaf(f2), &coords2, &cfg2).unwrap().value_clone();
    let expect = [2.0, 4.0, 4.0, 8.0]; // 0.5 f_i + 0.5 * mean
    for (a, b) in out2.data().iter().zip(&expect) {
        assert!(
            (a - b).abs() < 1e-12,
            "criterion 4 FAIL: two-point hand value {a} vs {b}"
        );
    }

    // weight simplex over >= 10,000 random cells
    let mut cells_seen = 0usize;
    let mut worst_sum_dev = 0.0f64;
    while cells_seen < 10_000 {
        let n = 40 + rng.below(80);
        let coords = Tensor::new(
            vec![n, 3],
            (0..n * 3).map(|_| rng.range(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let grid = build_grid(&coords, 0.25).unwrap();
        let weights = agt_weights(&grid, &coords);
        for ws in &weights {
            let sum: f64 = ws.iter().sum();
            assert!(
                ws.iter().all(|&w| w > 0.0),
                "criterion 4 FAIL: non-positive weight"
            );
            worst_sum_dev = worst_sum_dev.max((sum - 1.0).abs());
            cells_seen += 1;
        }
    }
    assert!(
        worst_sum_dev < 1e-12,
        "criterion 4 FAIL: weight sums deviate {worst_sum_dev:.3e}"
    );

    // pass-through channels bit-identical
    let n = 64;
    let coords = Tensor::new(
        vec![n, 3],
        (0..n * 3).map(|_| rng.range(-1.0, 1.0)).collect(),
    )
    .unwrap();
    let feats = Tensor::new(vec![n, 8], (0..n * 8).map(|_| rng.range(-3.0, 3.0)).collect()).unwrap();
    let cfg = AgtConfig {
        h: 0.4,
        lambda: 0.5,
        c_prime: Some(3),
    };
    let shifted = agt_shift(&Node::leaf(feats.clone()), &coords, &cfg)
        .unwrap()
        .value_clone();
    for i in 0..n {
        for ch in 3..8 {
            assert_eq!(
                shifted.data()[i * 8 + ch].to_bits(),
                feats.data()[i * 8 + ch].to_bits(),
                "criterion 4 FAIL: pass-through channel changed"
            );
        }
    }
    println!(
        "PASS criterion 4: singleton identity exact, hand values <= 1e-12, {cells_seen} cells on the simplex (worst {worst_sum_dev:.2e}), pass-through bit-identical"
    );
}

#[test]
fn criterion_5_kda_unit_truths() {
    let _guard = suite_lock();
    let mk = |rows: &[&[f64]]| {
        let c = rows[0].len();
        Node::leaf(Tensor::new(vec![rows.len(), c], rows.concat()).unwrap())
    };
    // identical domains -> exactly 0
    let a = mk(&[&[0.5, -1.0], &[2.0, 0.25], &[-1.5, 3.0]]);
    let b = mk(&[&[0.5, -1.0], &[2.0, 0.25], &[-1.5, 3.0]]);
    let zero = cd_kda_loss(&[key_stats(&a).unwrap(), key_stats(&b).unwrap()])
        .unwrap()
        .item();
    assert_eq!(zero, 0.0, "criterion 5 FAIL: identical domains give {zero}");

    // single domain -> 0 by the empty-pair guard
    let single = cd_kda_loss(&[key_stats(&a).unwrap()]).unwrap().item();
    assert_eq!(single, 0.0, "criterion 5 FAIL: single-domain guard");

    // hand example: mu gap 1, equal sigma -> loss 1
    let d0 = mk(&[&[0.0], &[2.0]]);
    let d1 = mk(&[&[1.0], &[3.0]]);
    let hand = cd_kda_loss(&[key_stats(&d0).unwrap(), key_stats(&d1).unwrap()])
        .unwrap()
        .item();
    assert!(
        (hand - 1.0).abs() <= 1e-12,
        "criterion 5 FAIL: hand example gives {hand}"
    );

    // permutation symmetry < 1e-12
    let mut rng = Rng::new(0xACCE5);
    let mats: Vec<Tensor> = (0..4)
        .map(|_| {
            Tensor::new(vec![6, 3], (0..18).map(|_| rng.range(-2.0, 2.0)).collect()).unwrap()
        })
        .collect();
    let stats: Vec<(Node, Node)> = mats
        .iter()
        .map(|m| key_stats(&Node::leaf(m.clone())).unwrap())
        .collect();
    let fwd = cd_kda_loss(&stats).unwrap().item();
    let mut perm = stats.clone();
    perm.rotate_left(2);
    perm.swap(0, 1);
    let shuffled = cd_kda_loss(&perm).unwrap().item();
    assert!(
        (fwd - shuffled).abs() < 1e-12,
        "criterion 5 FAIL: permutation moves loss by {:.3e}",
        (fwd - shuffled).abs()
    );

    // non-negativity over 10,000 random stat pairs
    let mut min_loss = f64::INFINITY;
    for i in 0..10_000 {
        let rows = 3 + rng.below(5);
        let c = 1 + rng.below(3);
        let m1 = Tensor::new(
            vec![rows, c],
            (0..rows * c).map(|_| rng.range(-3.0, 3.0)).collect(),
        )
        .unwrap();
        let m2 = Tensor::new(
            vec![rows, c],
            (0..rows * c).map(|_| rng.range(-3.0, 3.0)).collect(),
        )
        .unwrap();
        let (mu1, s1) = key_stats_tensor(&m1).unwrap();
        let (mu2, s2) = key_stats_tensor(&m2).unwrap();
        let loss = cd_kda_loss_tensor(&[
            KeyStats {
                domain_id: 0,
                mu: mu1,
                sigma: s1,
                count: rows,
            },
            KeyStats {
                domain_id: 1,
                mu: mu2,
                sigma: s2,
                count: rows,
            },
        ]);
        assert!(loss >= 0.0, "criterion 5 FAIL: negative loss {loss} at case {i}");
        min_loss = min_loss.min(loss);
    }
    println!(
        "PASS criterion 5: zero/guard/hand/permutation truths hold, 10000 random pairs non-negative (min {min_loss:.2e})"
    );
}

#[test]
fn criterion_6_complexity_claims() {
    let _guard = suite_lock();
    let started = Instant::now();
    let lengths = [1024usize, 2048, 4096, 8192, 16384];
    let ts: Vec<f64> = lengths.iter().map(|&t| t as f64).collect();

    let biwkv: Vec<f64> = lengths
        .iter()
        .map(|&t| bench::biwkv_flops(t, 64) as f64)
        .collect();
    let biwkv_slope = bench::loglog_slope(&ts, &biwkv);
    assert!(
        (biwkv_slope - 1.0).abs() <= 0.01,
        "criterion 6 FAIL: Bi-WKV analytic slope {biwkv_slope:.4}"
    );

    let softmax: Vec<f64> = lengths
        .iter()
        .map(|&t| bench::softmax_attention_flops(t, 64) as f64)
        .collect();
    let softmax_slope = bench::loglog_slope(&ts, &softmax);
    assert!(
        softmax_slope >= 1.8,
        "criterion 6 FAIL: softmax analytic slope {softmax_slope:.4} < 1.8"
    );

    // exact doubling ratios from the analytic counts
    assert_eq!(
        bench::biwkv_flops(2048, 64),
        2 * bench::biwkv_flops(1024, 64),
        "criterion 6 FAIL: Bi-WKV FLOPs T-doubling ratio is not exactly 2"
    );
    assert_eq!(
        bench::softmax_attention_flops(2048, 64),
        4 * bench::softmax_attention_flops(1024, 64),
        "criterion 6 FAIL: softmax FLOPs T-doubling ratio is not exactly 4"
    );

    // measured grid-shift scaling over N in {1k..16k}
    let agt_walls: Vec<f64> = lengths.iter().map(|&n| bench::measure_agt(n, 16, 5)).collect();
    let agt_slope = bench::loglog_slope(&ts, &agt_walls);
    assert!(
        agt_slope < 1.2,
        "criterion 6 FAIL: agt_shift wall-clock slope {agt_slope:.3} >= 1.2 (times {agt_walls:?})"
    );

    // linear-kernel wall clock: 16x token growth must cost at most 20x
    let w1k = bench::measure_biwkv(1024, 8, 5);
    let w16k = bench::measure_biwkv(16384, 8, 5);
    let ratio = w16k / w1k;
    assert!(
        ratio <= 20.0,
        "criterion 6 FAIL: Bi-WKV wall ratio 16k/1k = {ratio:.1} > 20"
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "criterion 6 FAIL: took {elapsed:.0}s >= 10 min");
    println!(
        "PASS criterion 6: slopes biwkv {biwkv_slope:.3}, softmax {softmax_slope:.3}, agt wall {agt_slope:.3}; biwkv 16k/1k wall ratio {ratio:.1}; {elapsed:.0}s"
    );
}

struct OrderingOutcome {
    baseline: f64,
    agts: f64,
    kda: f64,
    full: f64,
    ordering_holds: bool,
}

fn ordering_outcome(seeds: &[u64]) -> OrderingOutcome {
    let configs = [
        (ShiftMode::QShift, AlignMode::None),
        (ShiftMode::Agt, AlignMode::None),
        (ShiftMode::QShift, AlignMode::KOnly),
        (ShiftMode::Agt, AlignMode::KOnly),
    ];
    let tasks = 0..experiment_store().num_domains();
    let mut wanted = Vec::new();
    for &(shift, align) in &configs {
        for task in tasks.clone() {
            for &seed in seeds {
                wanted.push((shift, align, task, seed));
            }
        }
    }
    let results = cells(&wanted);
    let avg_of = |shift: ShiftMode, align: AlignMode| -> f64 {
        let vals: Vec<f64> = results
            .iter()
            .filter(|((s, a, _, sd), _)| *s == shift && *a == align && seeds.contains(sd))
            .map(|(_, &v)| v)
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let baseline = avg_of(ShiftMode::QShift, AlignMode::None);
    let agts = avg_of(ShiftMode::Agt, AlignMode::None);
    let kda = avg_of(ShiftMode::QShift, AlignMode::KOnly);
    let full = avg_of(ShiftMode::Agt, AlignMode::KOnly);
    let ordering_holds = full >= agts && agts >= baseline && full >= kda && kda >= baseline;
    OrderingOutcome {
        baseline,
        agts,
        kda,
        full,
        ordering_holds,
    }
}

#[test]
fn criterion_7_dg_ordering_experiment() {
    let _guard = suite_lock();
    let started = Instant::now();
    let three = [0u64, 1, 2];
    let mut outcome = ordering_outcome(&three);
    let mut seeds_used = 3;
    if !outcome.ordering_holds {
        // single seed-triple failure: the криterion passes if 5 seeds hold
        let five = [0u64, 1, 2, 3, 4];
        outcome = ordering_outcome(&five);
        seeds_used = 5;
    }
    let OrderingOutcome {
        baseline,
        agts,
        kda,
        full,
        ordering_holds,
    } = outcome;
    assert!(
        ordering_holds,
        "criterion 7 FAIL: ordering broken at {seeds_used} seeds: baseline {baseline:.3}, agts {agts:.3}, kda {kda:.3}, full {full:.3}"
    );
    assert!(
        full - baseline >= 0.02,
        "criterion 7 FAIL: full-baseline margin {:.3} < 2 points",
        full - baseline
    );
    for (name, acc) in [
        ("baseline", baseline),
        ("agts", agts),
        ("kda", kda),
        ("full", full),
    ] {
        assert!(
            acc >= 0.40,
            "criterion 7 FAIL: {name} at {acc:.3} does not exceed chance by 20 points"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 3600.0, "criterion 7 FAIL: took {elapsed:.0}s > 1h");
    println!(
        "PASS criterion 7: baseline {baseline:.3} <= agts {agts:.3} <= full {full:.3}, baseline <= kda {kda:.3} <= full, margin {:.1} pts, {seeds_used} seeds, {elapsed:.0}s",
        100.0 * (full - baseline)
    );
}

#[test]
fn criterion_8_align_ablation_protocol() {
    let _guard = suite_lock();
    // the suite's emitted rows are exactly the four alignment settings
    let rows: Vec<&str> = Suite::Align.variants().iter().map(|(n, _)| *n).collect();
    assert_eq!(
        rows,
        vec!["none", "only-v", "k-and-v", "only-k"],
        "criterion 8 FAIL: align suite rows are {rows:?}"
    );
    let seeds = [0u64, 1, 2];
    let aligns = [
        AlignMode::None,
        AlignMode::VOnly,
        AlignMode::KAndV,
        AlignMode::KOnly,
    ];
    let store = experiment_store();
    let mut wanted = Vec::new();
    for &align in &aligns {
        for task in 0..store.num_domains() {
            for &seed in &seeds {
                wanted.push((ShiftMode::Agt, align, task, seed));
            }
        }
    }
    let results = cells(&wanted);
    // assemble the genuine table the harness emits
    let variant_names: Vec<String> = rows.iter().map(|s| s.to_string()).collect();
    let task_names: Vec<String> = store
        .manifest
        .domains
        .iter()
        .map(|d| format!("->{}", d.name))
        .collect();
    let table = table_from_cells(&variant_names, &task_names, &seeds, |v, t, s| {
        results[&(ShiftMode::Agt, aligns[v], t, s)]
    });
    assert_eq!(table.variants, variant_names);
    assert_eq!(table.gain[0], 0.0, "criterion 8 FAIL: baseline Gain not 0");
    // Avg. column is the arithmetic mean of the task columns
    for v in 0..table.variants.len() {
        let mean: f64 = table.mean[v].iter().sum::<f64>() / table.mean[v].len() as f64;
        assert!(
            (table.avg[v] - mean).abs() < 1e-12,
            "criterion 8 FAIL: Avg. column mismatch"
        );
    }
    let none = table.avg[0];
    let only_k = table.avg[3];
    assert!(
        only_k - none >= 0.01,
        "criterion 8 FAIL: only-k {only_k:.3} does not beat none {none:.3} by 1 point"
    );
    println!(
        "PASS criterion 8: rows {rows:?}; only-k {only_k:.3} >= none {none:.3} + 1pt (only-v {:.3}, k-and-v {:.3})",
        table.avg[1], table.avg[2]
    );
}

#[test]
fn criterion_9_determinism_and_dg_hygiene() {
    let _guard = suite_lock();
    // byte-identical checkpoints across repeated seeded runs
    let manifest = Manifest {
        points_per_cloud: 64,
        train_per_class: 4,
        val_per_class: 2,
        test_per_class: 2,
        ..Default::default()
    };
    let store = DatasetStore::generate(&manifest).unwrap();
    let mut cfg = experiment_run();
    cfg.model.stage_widths = vec![8, 8, 16, 16];
    cfg.model.stage_points = vec![32, 16, 8, 4];
    cfg.model.num_classes = 5;
    cfg.epochs = 2;
    cfg.seed = 42;
    let dir = std::env::temp_dir().join("pointdg_acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let p1 = dir.join("run1.ckpt");
    let p2 = dir.join("run2.ckpt");
    train(&cfg, &store).unwrap().state.save(&p1).unwrap();
    train(&cfg, &store).unwrap().state.save(&p2).unwrap();
    let bytes1 = std::fs::read(&p1).unwrap();
    let bytes2 = std::fs::read(&p2).unwrap();
    assert_eq!(bytes1, bytes2, "criterion 9 FAIL: checkpoints differ across runs");

    // access logger proves zero target-domain reads during training
    store.reset_reads();
    let _ = train(&cfg, &store).unwrap();
    let mut target_reads = 0;
    for split in [Split::Train, Split::Val, Split::Test] {
        target_reads += store.reads_of(cfg.task, split);
    }
    assert_eq!(
        target_reads, 0,
        "criterion 9 FAIL: training touched the target domain {target_reads} times"
    );

    // manifest regeneration is byte-identical
    let d1 = dir.join("tree_a");
    let d2 = dir.join("tree_b");
    for d in [&d1, &d2] {
        std::fs::create_dir_all(d).unwrap();
        pointdg::data::build_benchmark(&manifest, d, true).unwrap();
    }
    fn walk(dir: &std::path::Path, base: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, base, out);
            } else {
                out.push(path.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut files = Vec::new();
    walk(&d1, &d1, &mut files);
    files.sort();
    let mut compared = 0;
    for rel in &files {
        let a = std::fs::read(d1.join(rel)).unwrap();
        let b = std::fs::read(d2.join(rel)).unwrap();
        assert_eq!(a, b, "criterion 9 FAIL: {} differs", rel.display());
        compared += 1;
    }
    assert!(compared > 0);
    let _ = std::fs::remove_dir_all(&dir);

    // the cosine schedule endpoints are part of run determinism
    assert_eq!(cosine_lr(0, 10, 1e-3, 0.0).unwrap(), 1e-3);
    println!(
        "PASS criterion 9: byte-identical checkpoints, zero target reads, {compared} regenerated files identical"
    );
}
