use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchtw::stats::ks_two_sample;
use sketchtw::{
    apply_sketch, build_sketch, simulate_wishart_trials, sketch_embedding_trials, thin_svd_factor, DenseMatrix,
    SketchKind, SketchSpec,
};

const DRAWS: u64 = 10_000;

fn sketch_vec(kind: SketchKind, k: usize, seed: u64, x: &[f64]) -> Vec<f64> {
    let a = DenseMatrix::from_col_major(x.len(), 1, x.to_vec()).unwrap();
    let op = build_sketch(SketchSpec::new(kind, k, seed).unwrap(), x.len()).unwrap();
    apply_sketch(&op, &a).unwrap().as_slice().to_vec()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|mean - target| ≤ 3 standard errors` over `DRAWS` samples of `f`.
fn assert_unbiased(label: &str, target: f64, mut f: impl FnMut(u64) -> f64) {
    let xs: Vec<f64> = (0..DRAWS).map(&mut f).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    // Rounding slack covers zero-variance cases such as uniform sampling of a flat vector.
    assert!((mean - target).abs() <= 3.0 * se + 1e-12, "{label}: mean {mean} vs {target} (se {se})");
}

#[test]
fn sketches_preserve_norms_and_inner_products_in_expectation() {
    // n = 6 is not a power of two, so the Hadamard sketch pads to 8.
    let e1 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let flat = [1.0 / 6f64.sqrt(); 6];
    let v = [0.3, -1.2, 2.0, 0.0, 0.7, -0.4];
    for kind in SketchKind::ALL {
        let k = 4;
        for (name, x) in [("e1", &e1), ("flat", &flat), ("v", &v)] {
            assert_unbiased(&format!("{kind} ‖S{name}‖²"), dot(x, x), |s| {
                let sx = sketch_vec(kind, k, s, x);
                dot(&sx, &sx)
            });
        }
        assert_unbiased(&format!("{kind} ⟨S flat, S v⟩"), dot(&flat, &v), |s| {
            dot(&sketch_vec(kind, k, s, &flat), &sketch_vec(kind, k, s, &v))
        });
    }
}

#[test]
fn gaussian_sketch_is_pivotal() {
    // UᵀSᵀSU has the same law for every orthonormal U, so the distortion
    // distribution cannot depend on which U is sketched.
    let (n, d, k, b) = (300, 5, 60, 2000);
    let block = DenseMatrix::from_fn(n, d, |i, j| if i == j { 1.0 } else { 0.0 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dense = DenseMatrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5).unwrap();
    let u1 = thin_svd_factor(&block).unwrap();
    let u2 = thin_svd_factor(&dense).unwrap();
    let a = sketch_embedding_trials(&u1, SketchKind::Gaussian, k, b, 11).unwrap();
    let c = sketch_embedding_trials(&u2, SketchKind::Gaussian, k, b, 12).unwrap();
    let w = simulate_wishart_trials(k, d, b, 13).unwrap();
    // Two-sample KS critical value at level 0.001 is 1.95·√(2/b) ≈ 0.062.
    assert!(ks_two_sample(&a.eps_samples, &c.eps_samples) < 0.062);
    assert!(ks_two_sample(&a.eps_samples, &w.eps_samples) < 0.062);
}

fn kind_strategy() -> impl Strategy<Value = SketchKind> {
    prop::sample::select(SketchKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_application_matches_explicit_matrix(kind in kind_strategy(), n in 1usize..40, k in 1usize..12, d in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0).unwrap();
        let op = build_sketch(SketchSpec::new(kind, k, seed).unwrap(), n).unwrap();
        let fast = apply_sketch(&op, &a).unwrap();
        let slow = op.to_dense().unwrap().matmul(&a).unwrap();
        prop_assert_eq!(fast.shape(), (k, d));
        for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sketching_is_linear(kind in kind_strategy(), n in 2usize..30, seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
        let (sx, sy, sz) = (sketch_vec(kind, 5, seed, &x), sketch_vec(kind, 5, seed, &y), sketch_vec(kind, 5, seed, &z));
        for i in 0..5 {
            prop_assert!((sz[i] - (alpha * sx[i] + sy[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn structure_of_each_family(n in 1usize..50, k in 1usize..10, seed in any::<u64>()) {
        let kf = k as f64;
        let cw = build_sketch(SketchSpec::new(SketchKind::ClarksonWoodruff, k, seed).unwrap(), n).unwrap().to_dense().unwrap();
        for j in 0..n {
            let nz: Vec<f64> = (0..k).map(|i| cw.get(i, j)).filter(|v| *v != 0.0).collect();
            prop_assert_eq!(nz.len(), 1);
            prop_assert_eq!(nz[0].abs(), 1.0);
        }
        let h = build_sketch(SketchSpec::new(SketchKind::Hadamard, k, seed).unwrap(), n).unwrap().to_dense().unwrap();
        prop_assert!(h.as_slice().iter().all(|v| (v.abs() - 1.0 / kf.sqrt()).abs() < 1e-15));
        let u = build_sketch(SketchSpec::new(SketchKind::Uniform, k, seed).unwrap(), n).unwrap().to_dense().unwrap();
        let scale = (n as f64 / kf).sqrt();
        for i in 0..k {
            let row = u.row(i);
            prop_assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 1);
            prop_assert!(row.iter().all(|v| *v == 0.0 || (*v - scale).abs() < 1e-12));
        }
    }

    #[test]
    fn same_seed_same_sketch(kind in kind_strategy(), n in 1usize..300, seed in any::<u64>()) {
        let spec = SketchSpec::new(kind, 7, seed).unwrap();
        let a = build_sketch(spec, n).unwrap().to_dense().unwrap();
        let b = build_sketch(spec, n).unwrap().to_dense().unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn gaussian_blocks_cover_wide_inputs() {
    // Wider than one lazily generated block of columns.
    let n = 700;
    let a = DenseMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0).unwrap();
    let op = build_sketch(SketchSpec::new(SketchKind::Gaussian, 9, 5).unwrap(), n).unwrap();
    let fast = apply_sketch(&op, &a).unwrap();
    let slow = op.to_dense().unwrap().matmul(&a).unwrap();
    for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
        assert!((x - y).abs() < 1e-10);
    }
}
