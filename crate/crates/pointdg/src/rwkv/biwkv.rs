//! Bidirectional WKV attention kernel.
//!
//! For token t and channel c, with decay w and self-bias u:
//!
//! ```text
//! wkv[t] = ( sum_{i!=t} e^{-(|t-i|-1)/T * w + k[i]} * v[i]  +  e^{u + k[t]} * v[t] )
//!          / ( same weights without v )
//! ```
//!
//! [`bi_wkv_quadratic`] evaluates the double sum directly and is the oracle.
//! [`bi_wkv_linear`] computes the same quantity in O(T) per channel with two
//! prefix scans (one per direction); every accumulator carries a running max
//! exponent so no intermediate exponential can overflow. [`bi_wkv_node`] wraps
//! the linear form as an autodiff op with an O(T) backward pass.

use crate::autodiff::Node;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Max-shifted exponential accumulator: represents sums `S_j = Σ e^{x - m} p_j`
/// over inserted terms, with `m` tracking the largest exponent seen. A decay
/// that multiplies every term by `e^d` is just `m += d`.
#[derive(Clone, Copy)]
struct ExpAcc<const P: usize> {
    m: f64,
    s: [f64; P],
}

impl<const P: usize> ExpAcc<P> {
    fn new() -> Self {
        ExpAcc {
            m: f64::NEG_INFINITY,
            s: [0.0; P],
        }
    }

    #[inline]
    fn decay(&mut self, d: f64) {
        self.m += d;
    }

    /// Add `src` sum into `dst` sum (the distance-weighting recurrence
    /// `D <- D + A` in shifted space).
    #[inline]
    fn bump(&mut self, dst: usize, src: usize) {
        self.s[dst] += self.s[src];
    }

    #[inline]
    fn insert(&mut self, x: f64, payload: &[f64; P]) {
        if x > self.m {
            let scale = (self.m - x).exp(); // 0 when m = -inf
            for s in &mut self.s {
                *s *= scale;
            }
            self.m = x;
        }
        let w = (x - self.m).exp();
        for (s, p) in self.s.iter_mut().zip(payload) {
            *s += w * p;
        }
    }
}

fn check_kv(k: &Tensor, v: &Tensor, w: &[f64], u: &[f64]) -> Result<(usize, usize)> {
    if k.rank() != 2 || k.shape() != v.shape() {
        return Err(Error::ShapeMismatch(format!(
            "bi_wkv expects matching TxC inputs, got {:?} and {:?}",
            k.shape(),
            v.shape()
        )));
    }
    let (t_len, c) = (k.shape()[0], k.shape()[1]);
    if w.len() != c || u.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "decay/bias length {}/{} does not match C={}",
            w.len(),
            u.len(),
            c
        )));
    }
    if t_len == 0 {
        return Err(Error::ShapeMismatch("empty sequence".into()));
    }
    Ok((t_len, c))
}

/// Direct double-loop evaluation; ground truth for the linear kernel.
/// Asserts that the implicit attention weights are positive and sum to 1 per
/// (t, channel).
pub fn bi_wkv_quadratic(k: &Tensor, v: &Tensor, w: &[f64], u: &[f64]) -> Result<Tensor> {
    let (t_len, c) = check_kv(k, v, w, u)?;
    let tf = t_len as f64;
    let mut out = Tensor::zeros(k.shape());
    for ch in 0..c {
        for t in 0..t_len {
            // gather exponents with a running max
            let mut m = u[ch] + k.data()[t * c + ch];
            for i in 0..t_len {
                if i == t {
                    continue;
                }
                let dist = (t as f64 - i as f64).abs();
                let x = -((dist - 1.0) / tf) * w[ch] + k.data()[i * c + ch];
                if x > m {
                    m = x;
                }
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..t_len {
                let x = if i == t {
                    u[ch] + k.data()[t * c + ch]
                } else {
                    let dist = (t as f64 - i as f64).abs();
                    -((dist - 1.0) / tf) * w[ch] + k.data()[i * c + ch]
                };
                let e = (x - m).exp();
                num += e * v.data()[i * c + ch];
                den += e;
            }
            debug_assert!(den > 0.0);
            // implicit weights form a probability simplex
            let mut weight_sum = 0.0;
            for i in 0..t_len {
                let x = if i == t {
                    u[ch] + k.data()[t * c + ch]
                } else {
                    let dist = (t as f64 - i as f64).abs();
                    -((dist - 1.0) / tf) * w[ch] + k.data()[i * c + ch]
                };
                let wt = (x - m).exp() / den;
                assert!(wt > 0.0, "attention weight must be positive");
                weight_sum += wt;
            }
            assert!(
                (weight_sum - 1.0).abs() < 1e-9,
                "attention weights must sum to 1, got {weight_sum}"
            );
            out.data_mut()[t * c + ch] = num / den;
        }
    }
    Ok(out)
}

/// Per-(t,c) scan state recorded by the forward pass: numerator/denominator
/// accumulators for both directions plus the final output and log-denominator.
struct ScanResult {
    wkv: Tensor,
    /// log of the true denominator (max exponent + log of shifted sum)
    log_den: Tensor,
}

fn linear_forward(k: &Tensor, v: &Tensor, w: &[f64], u: &[f64]) -> Result<ScanResult> {
    let (t_len, c) = check_kv(k, v, w, u)?;
    let tf = t_len as f64;
    let mut wkv = Tensor::zeros(k.shape());
    let mut log_den = Tensor::zeros(k.shape());
    let kd = k.data();
    let vd = v.data();
    for ch in 0..c {
        let step = -w[ch] / tf;
        // forward direction: sums over i < t of e^{k_i - (t-1-i) w/T} [v_i, 1]
        let mut fwd: Vec<(f64, f64, f64)> = Vec::with_capacity(t_len);
        let mut acc = ExpAcc::<2>::new();
        for t in 0..t_len {
            fwd.push((acc.m, acc.s[0], acc.s[1]));
            acc.decay(step);
            acc.insert(kd[t * c + ch], &[vd[t * c + ch], 1.0]);
        }
        // backward direction: sums over i > t, mirrored scan
        let mut bwd: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); t_len];
        let mut acc = ExpAcc::<2>::new();
        for t in (0..t_len).rev() {
            bwd[t] = (acc.m, acc.s[0], acc.s[1]);
            acc.decay(step);
            acc.insert(kd[t * c + ch], &[vd[t * c + ch], 1.0]);
        }
        for t in 0..t_len {
            let (mf, fv, f1) = fwd[t];
            let (mb, bv, b1) = bwd[t];
            let xs = u[ch] + kd[t * c + ch];
            let m = mf.max(mb).max(xs);
            let ef = (mf - m).exp(); // 0 if scan empty
            let eb = (mb - m).exp();
            let es = (xs - m).exp();
            let num = (ef * fv + eb * bv) + es * vd[t * c + ch];
            let den = (ef * f1 + eb * b1) + es;
            wkv.data_mut()[t * c + ch] = num / den;
            log_den.data_mut()[t * c + ch] = m + den.ln();
        }
    }
    Ok(ScanResult { wkv, log_den })
}

/// O(T) evaluation of the kernel; agrees with [`bi_wkv_quadratic`] to
/// floating-point noise.
pub fn bi_wkv_linear(k: &Tensor, v: &Tensor, w: &[f64], u: &[f64]) -> Result<Tensor> {
    Ok(linear_forward(k, v, w, u)?.wkv)
}

/// Gradients of the kernel. All four inputs receive gradients; cost is O(T*C)
/// via the same two-directional scan structure as the forward pass, extended
/// with distance-weighted sums for d/dw.
#[allow(clippy::too_many_arguments)]
fn linear_backward(
    k: &Tensor,
    v: &Tensor,
    w: &[f64],
    u: &[f64],
    wkv: &Tensor,
    log_den: &Tensor,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Vec<f64>, Vec<f64>) {
    let t_len = k.shape()[0];
    let c = k.shape()[1];
    let tf = t_len as f64;
    let kd = k.data();
    let vd = v.data();
    let od = wkv.data();
    let ld = log_den.data();
    let gd = grad_out.data();

    let mut dk = Tensor::zeros(k.shape());
    let mut dv = Tensor::zeros(v.shape());
    let mut dw = vec![0.0; c];
    let mut du = vec![0.0; c];

    // Per direction, per position i, we need sums over the opposite-side
    // tokens t of e^{s(t,i) - L_t} * [g_t, g_t*wkv_t] and the same sums
    // weighted by the decay distance (|t-i|-1). Payload slots:
    //   0: A  = sum e^{x} g_t
    //   1: B  = sum e^{x} g_t wkv_t
    //   2: D  = sum (|t-i|-1) e^{x} g_t
    //   3: E  = sum (|t-i|-1) e^{x} g_t wkv_t
    for ch in 0..c {
        let step = -w[ch] / tf;
        let scan = |iter: &mut dyn Iterator<Item = usize>,
                    out: &mut Vec<(f64, [f64; 4])>| {
            let mut acc = ExpAcc::<4>::new();
            for t in iter {
                out.push((acc.m, acc.s));
                acc.bump(2, 0);
                acc.bump(3, 1);
                acc.decay(step);
                let g = gd[t * c + ch];
                let gw = g * od[t * c + ch];
                acc.insert(-ld[t * c + ch], &[g, gw, 0.0, 0.0]);
            }
        };
        let mut asc: Vec<(f64, [f64; 4])> = Vec::with_capacity(t_len);
        scan(&mut (0..t_len), &mut asc);
        let mut desc_rev: Vec<(f64, [f64; 4])> = Vec::with_capacity(t_len);
        scan(&mut (0..t_len).rev(), &mut desc_rev);

        for i in 0..t_len {
            let ki = kd[i * c + ch];
            let vi = vd[i * c + ch];
            let (ma, sa) = asc[i];
            let (md, sd) = desc_rev[t_len - 1 - i];
            // e^{k_i + m} is bounded by the largest attention weight of
            // token i anywhere, which is <= 1.
            let ea = (ki + ma).exp();
            let ed = (ki + md).exp();
            let self_w = (u[ch] + ki - ld[i * c + ch]).exp();
            let gi = gd[i * c + ch];

            dv.data_mut()[i * c + ch] = ea * sa[0] + ed * sd[0] + self_w * gi;
            dk.data_mut()[i * c + ch] = ea * (vi * sa[0] - sa[1])
                + ed * (vi * sd[0] - sd[1])
                + self_w * gi * (vi - od[i * c + ch]);
            dw[ch] += -(1.0 / tf) * (ea * (vi * sa[2] - sa[3]) + ed * (vi * sd[2] - sd[3]));
            du[ch] += self_w * gi * (vi - od[i * c + ch]);
        }
    }
    (dk, dv, dw, du)
}

/// Autodiff wrapper over the linear kernel. `w` and `u` are rank-1 nodes of
/// length C; `k` and `v` are rank-2 TxC.
pub fn bi_wkv_node(k: &Node, v: &Node, w: &Node, u: &Node) -> Result<Node> {
    let wv = w.value_clone();
    let uv = u.value_clone();
    if wv.rank() != 1 || uv.rank() != 1 {
        return Err(Error::ShapeMismatch(
            "decay and bias must be rank-1 vectors".into(),
        ));
    }
    let scan = linear_forward(&k.value(), &v.value(), wv.data(), uv.data())?;
    let (kc, vc) = (k.clone(), v.clone());
    let wkv = scan.wkv.clone();
    let log_den = scan.log_den;
    let (wd, ud) = (wv, uv);
    Ok(Node::from_op(
        scan.wkv,
        vec![k.clone(), v.clone(), w.clone(), u.clone()],
        Box::new(move |_, g| {
            let (dk, dv, dw, du) = linear_backward(
                &kc.value(),
                &vc.value(),
                wd.data(),
                ud.data(),
                &wkv,
                &log_den,
                g,
            );
            vec![dk, dv, Tensor::from_vec(dw), Tensor::from_vec(du)]
        }),
    ))
}
