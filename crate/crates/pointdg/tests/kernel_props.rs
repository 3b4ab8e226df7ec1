//! Property tests for the kernel invariants: linear/quadratic agreement,
//! exponent-shift invariance, weight simplex, broadcast-vs-tiling, and the
//! shift fusion rules.

use pointdg::agt::{agt_shift, agt_weights, build_grid, AgtConfig};
use pointdg::autodiff::Node;
use pointdg::rwkv::{bi_wkv_linear, bi_wkv_quadratic};
use pointdg::tensor::{binary_broadcast, Tensor};
use proptest::prelude::*;

fn max_rel_dev(a: &Tensor, b: &Tensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_equals_quadratic(
        t in prop::sample::select(vec![1usize, 2, 3, 7, 64]),
        seed in 0u64..1_000_000,
    ) {
        let mut rng = pointdg::rng::Rng::new(seed);
        let c = 3;
        let mk = |rng: &mut pointdg::rng::Rng| {
            Tensor::new(vec![t, c], (0..t * c).map(|_| rng.range(-5.0, 5.0)).collect()).unwrap()
        };
        let k = mk(&mut rng);
        let v = mk(&mut rng);
        let w: Vec<f64> = (0..c).map(|_| rng.range(-5.0, 5.0)).collect();
        let u: Vec<f64> = (0..c).map(|_| rng.range(-5.0, 5.0)).collect();
        let quad = bi_wkv_quadratic(&k, &v, &w, &u).unwrap();
        let lin = bi_wkv_linear(&k, &v, &w, &u).unwrap();
        prop_assert!(max_rel_dev(&quad, &lin) <= 1e-10);
    }

    #[test]
    fn exponent_shift_leaves_kernel_unchanged(
        seed in 0u64..1_000_000,
        c_shift in -50.0f64..50.0,
    ) {
        let mut rng = pointdg::rng::Rng::new(seed);
        let (t, c) = (17, 2);
        let mk = |rng: &mut pointdg::rng::Rng| {
            Tensor::new(vec![t, c], (0..t * c).map(|_| rng.range(-2.0, 2.0)).collect()).unwrap()
        };
        let k = mk(&mut rng);
        let v = mk(&mut rng);
        let w: Vec<f64> = (0..c).map(|_| rng.range(-2.0, 2.0)).collect();
        let u: Vec<f64> = (0..c).map(|_| rng.range(-2.0, 2.0)).collect();
        let base = bi_wkv_linear(&k, &v, &w, &u).unwrap();
        let shifted = bi_wkv_linear(&k.map(|x| x + c_shift), &v, &w, &u).unwrap();
        prop_assert!(max_rel_dev(&base, &shifted) < 1e-8);
    }

    #[test]
    fn broadcast_add_equals_explicit_tiling(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in 0u64..1_000_000,
    ) {
        let mut rng = pointdg::rng::Rng::new(seed);
        let a = Tensor::new(
            vec![rows, cols],
            (0..rows * cols).map(|_| rng.range(-3.0, 3.0)).collect(),
        )
        .unwrap();
        let b = Tensor::new(vec![cols], (0..cols).map(|_| rng.range(-3.0, 3.0)).collect()).unwrap();
        let broadcast = binary_broadcast(&a, &b, |x, y| x + y).unwrap();
        // explicit tiling of b to [rows, cols]
        let mut tiled = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            tiled.extend_from_slice(b.data());
        }
        let tiled = Tensor::new(vec![rows, cols], tiled).unwrap();
        let explicit = binary_broadcast(&a, &tiled, |x, y| x + y).unwrap();
        prop_assert_eq!(broadcast.data(), explicit.data());
    }

    #[test]
    fn agt_weights_form_a_simplex(n in 2usize..60, seed in 0u64..1_000_000) {
        let mut rng = pointdg::rng::Rng::new(seed);
        let coords = Tensor::new(
            vec![n, 3],
            (0..n * 3).map(|_| rng.range(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let grid = build_grid(&coords, 0.3).unwrap();
        let weights = agt_weights(&grid, &coords);
        for ws in &weights {
            let sum: f64 = ws.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(ws.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn agt_passthrough_channels_untouched(seed in 0u64..1_000_000) {
        let mut rng = pointdg::rng::Rng::new(seed);
        let n = 24;
        let c = 8;
        let coords = Tensor::new(
            vec![n, 3],
            (0..n * 3).map(|_| rng.range(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let f = Tensor::new(vec![n, c], (0..n * c).map(|_| rng.range(-2.0, 2.0)).collect()).unwrap();
        let cfg = AgtConfig { c_prime: Some(3), ..Default::default() };
        let out = agt_shift(&Node::leaf(f.clone()), &coords, &cfg).unwrap().value_clone();
        for i in 0..n {
            for ch in 3..c {
                prop_assert_eq!(out.data()[i * c + ch].to_bits(), f.data()[i * c + ch].to_bits());
            }
        }
    }

    #[test]
    fn kernel_output_bounded_by_value_range(seed in 0u64..1_000_000) {
        // wkv is a convex combination of v rows per channel
        let mut rng = pointdg::rng::Rng::new(seed);
        let (t, c) = (9, 2);
        let mk = |rng: &mut pointdg::rng::Rng| {
            Tensor::new(vec![t, c], (0..t * c).map(|_| rng.range(-4.0, 4.0)).collect()).unwrap()
        };
        let k = mk(&mut rng);
        let v = mk(&mut rng);
        let w: Vec<f64> = (0..c).map(|_| rng.range(-3.0, 3.0)).collect();
        let u: Vec<f64> = (0..c).map(|_| rng.range(-3.0, 3.0)).collect();
        let out = bi_wkv_linear(&k, &v, &w, &u).unwrap();
        for ch in 0..c {
            let lo = (0..t).map(|i| v.data()[i * c + ch]).fold(f64::INFINITY, f64::min);
            let hi = (0..t).map(|i| v.data()[i * c + ch]).fold(f64::NEG_INFINITY, f64::max);
            for i in 0..t {
                let x = out.data()[i * c + ch];
                prop_assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
            }
        }
    }
}
