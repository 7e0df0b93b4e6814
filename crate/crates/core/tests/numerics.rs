use featlab_core::stats::{binomial_interval, linear_fit, mean};
use featlab_core::{bootstrap_ci, matmul, pearson, Matrix, Rng};
use proptest::prelude::*;

fn naive(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.row(i)[k] * b.row(k)[j]).sum())
}

proptest! {
    #[test]
    fn matmul_agrees_with_triple_loop(n in 1usize..9, k in 1usize..9, m in 1usize..9, seed in any::<u64>()) {
        let mut rng = Rng::seed_from(seed);
        let a = Matrix::from_fn(n, k, |_, _| rng.normal());
        let b = Matrix::from_fn(k, m, |_, _| rng.normal());
        let c = matmul(&a, &b).unwrap();
        let d = naive(&a, &b);
        for (x, y) in c.as_slice().iter().zip(d.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn pearson_is_affine_invariant(seed in any::<u64>(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let mut rng = Rng::seed_from(seed);
        let x: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
        let y2: Vec<f64> = y.iter().map(|v| v * scale + shift).collect();
        prop_assert!((pearson(&x, &y).unwrap() - pearson(&x, &y2).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn named_children_are_stable_and_distinct() {
    let root = Rng::seed_from(42);
    let draw = |mut r: Rng| (0..4).map(|_| r.next_u64()).collect::<Vec<_>>();
    assert_eq!(draw(root.child_named("train")), draw(Rng::seed_from(42).child_named("train")));
    assert_ne!(draw(root.child_named("train")), draw(root.child_named("decode")));
    assert_ne!(draw(root.child(0)), draw(root.child(1)));
}

#[test]
fn bootstrap_interval_brackets_the_mean() {
    let mut rng = Rng::seed_from(3);
    let xs: Vec<f64> = (0..200).map(|_| rng.uniform()).collect();
    let s = bootstrap_ci(&xs, 2000, &mut Rng::seed_from(4), 0.95).unwrap();
    let m = mean(&xs);
    assert!(s.ci_low < m && m < s.ci_high);
    let again = bootstrap_ci(&xs, 2000, &mut Rng::seed_from(4), 0.95).unwrap();
    assert_eq!(s, again);
}

#[test]
fn binomial_interval_widens_with_confidence() {
    let (lo, hi) = binomial_interval(0.5, 100, 1.96);
    let (lo99, hi99) = binomial_interval(0.5, 100, 2.576);
    assert!(lo99 < lo && hi < hi99);
    assert!((hi - 0.598).abs() < 1e-3);
}

#[test]
fn line_through_points() {
    let (slope, intercept) = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
    assert!((slope - 2.0).abs() < 1e-12 && (intercept - 1.0).abs() < 1e-12);
}
