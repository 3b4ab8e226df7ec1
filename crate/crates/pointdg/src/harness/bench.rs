//! Complexity benchmarks: analytic FLOP counts and wall-clock measurements
//! for the linear WKV kernel, a quadratic softmax-attention reference, and
//! the grid shift.

use std::fmt::Write as _;
use std::time::Instant;

use crate::agt::{agt_shift, AgtConfig};
use crate::autodiff::Node;
use crate::error::Result;
use crate::rng::Rng;
use crate::rwkv::bi_wkv_linear;
use crate::tensor::Tensor;

/// Kernel work of the linear Bi-WKV forward: a fixed number of operations per
/// (token, channel) for the two scans plus the combine step. Strictly linear
/// in T by construction.
pub fn biwkv_flops(t: usize, c: usize) -> u64 {
    const OPS_PER_ELEMENT: u64 = 28; // 2 scans * ~8 ops + combine ~12
    OPS_PER_ELEMENT * t as u64 * c as u64
}

/// Attention-matrix work of a softmax attention forward: scores (2C per
/// pair), max/exp/sum/normalize (~5 per pair), weighted sum (2C per pair).
/// The T^2 term dominates; projection costs are shared with the linear
/// kernel and excluded from the comparison.
pub fn softmax_attention_flops(t: usize, c: usize) -> u64 {
    (t as u64) * (t as u64) * (4 * c as u64 + 5)
}

/// Reference quadratic softmax-attention forward (wall-clock comparator).
pub fn softmax_attention_forward(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    let (t, c) = (q.rows(), q.cols());
    let scale = 1.0 / (c as f64).sqrt();
    let mut out = Tensor::zeros(&[t, c]);
    let mut scores = vec![0.0; t];
    for i in 0..t {
        let qi = q.row(i);
        let mut m = f64::NEG_INFINITY;
        for j in 0..t {
            let kj = k.row(j);
            let s: f64 = qi.iter().zip(kj).map(|(&a, &b)| a * b).sum::<f64>() * scale;
            scores[j] = s;
            if s > m {
                m = s;
            }
        }
        let mut z = 0.0;
        for s in &mut scores {
            *s = (*s - m).exp();
            z += *s;
        }
        let row = &mut out.data_mut()[i * c..(i + 1) * c];
        for j in 0..t {
            let w = scores[j] / z;
            for (o, &x) in row.iter_mut().zip(v.row(j)) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

fn random_matrix(t: usize, c: usize, rng: &mut Rng) -> Tensor {
    Tensor::new(vec![t, c], (0..t * c).map(|_| rng.range(-1.0, 1.0)).collect()).expect("counted")
}

/// Median wall-clock seconds over `reps` runs of `f`.
fn median_secs(reps: usize, mut f: impl FnMut()) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

pub fn measure_biwkv(t: usize, c: usize, reps: usize) -> f64 {
    let mut rng = Rng::new(42);
    let k = random_matrix(t, c, &mut rng);
    let v = random_matrix(t, c, &mut rng);
    let w: Vec<f64> = (0..c).map(|_| rng.range(0.0, 1.0)).collect();
    let u: Vec<f64> = (0..c).map(|_| rng.range(-0.5, 0.5)).collect();
    median_secs(reps, || {
        let out = bi_wkv_linear(&k, &v, &w, &u).expect("valid inputs");
        std::hint::black_box(out);
    })
}

pub fn measure_softmax(t: usize, c: usize, reps: usize) -> f64 {
    let mut rng = Rng::new(43);
    let q = random_matrix(t, c, &mut rng);
    let k = random_matrix(t, c, &mut rng);
    let v = random_matrix(t, c, &mut rng);
    median_secs(reps, || {
        let out = softmax_attention_forward(&q, &k, &v).expect("valid inputs");
        std::hint::black_box(out);
    })
}

/// Wall-clock of build_grid + agt_shift over a uniform cube cloud of size n.
pub fn measure_agt(n: usize, c: usize, reps: usize) -> f64 {
    let mut rng = Rng::new(44);
    let coords = Tensor::new(
        vec![n, 3],
        (0..n * 3).map(|_| rng.range(-1.0, 1.0)).collect(),
    )
    .expect("counted");
    let features = random_matrix(n, c, &mut rng);
    let cfg = AgtConfig::default();
    median_secs(reps, || {
        let node = Node::leaf(features.clone());
        let out = agt_shift(&node, &coords, &cfg).expect("valid inputs");
        std::hint::black_box(out.value_clone());
    })
}

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

pub struct BenchRow {
    pub kernel: String,
    pub length: usize,
    pub flops: u64,
    pub wall_secs: Option<f64>,
}

pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub slopes: Vec<(String, f64)>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kernel,length,flops,wall_secs\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.kernel,
                r.length,
                r.flops,
                r.wall_secs.map_or(String::from("-"), |w| w.to_string())
            );
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (name, slope) in &self.slopes {
            let _ = writeln!(s, "{name}: log-log slope {slope:.3}");
        }
        s
    }
}

/// Run the benchmark over the given lengths. `kernel` restricts to one of
/// "biwkv" / "softmax" / "agt"; `None` runs all three. Wall-clock for the
/// quadratic comparator is skipped above 4096 tokens.
pub fn run_bench(kernel: Option<&str>, lengths: &[usize], width: usize) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let want = |k: &str| kernel.is_none_or(|sel| sel == k);

    if want("biwkv") {
        let mut walls = Vec::new();
        for &t in lengths {
            let wall = measure_biwkv(t, width, 3);
            walls.push(wall);
            rows.push(BenchRow {
                kernel: "biwkv".into(),
                length: t,
                flops: biwkv_flops(t, width),
                wall_secs: Some(wall),
            });
        }
        let flops: Vec<f64> = lengths.iter().map(|&t| biwkv_flops(t, width) as f64).collect();
        let ts: Vec<f64> = lengths.iter().map(|&t| t as f64).collect();
        slopes.push(("biwkv flops".into(), loglog_slope(&ts, &flops)));
        slopes.push(("biwkv wall".into(), loglog_slope(&ts, &walls)));
    }
    if want("softmax") {
        let mut measured: Vec<(f64, f64)> = Vec::new();
        for &t in lengths {
            let wall = if t <= 4096 {
                let w = measure_softmax(t, width, 3);
                measured.push((t as f64, w));
                Some(w)
            } else {
                None
            };
            rows.push(BenchRow {
                kernel: "softmax".into(),
                length: t,
                flops: softmax_attention_flops(t, width),
                wall_secs: wall,
            });
        }
        let flops: Vec<f64> = lengths
            .iter()
            .map(|&t| softmax_attention_flops(t, width) as f64)
            .collect();
        let ts: Vec<f64> = lengths.iter().map(|&t| t as f64).collect();
        slopes.push(("softmax flops".into(), loglog_slope(&ts, &flops)));
        if measured.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = measured.into_iter().unzip();
            slopes.push(("softmax wall".into(), loglog_slope(&xs, &ys)));
        }
    }
    if want("agt") {
        let mut walls = Vec::new();
        for &n in lengths {
            let wall = measure_agt(n, width, 3);
            walls.push(wall);
            rows.push(BenchRow {
                kernel: "agt".into(),
                length: n,
                flops: 0,
                wall_secs: Some(wall),
            });
        }
        let ns: Vec<f64> = lengths.iter().map(|&n| n as f64).collect();
        slopes.push(("agt wall".into(), loglog_slope(&ns, &walls)));
    }
    Ok(BenchReport { rows, slopes })
}
