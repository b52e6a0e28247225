mod common;

use common::*;
use dfsep::subspace::{find_orth, project_onto_span, thin_svd};
use proptest::prelude::*;

#[test]
fn svd_agrees_with_nalgebra_singular_values() {
    let mut r = rng(12);
    for (m, n) in [(7, 4), (4, 7), (10, 10), (30, 3)] {
        let a = random_matrix(&mut r, m, n, -1.0, 1.0);
        let ours = thin_svd(&a).unwrap();
        let mut theirs: Vec<f64> = to_dmatrix(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (s, t) in ours.sigma.iter().zip(&theirs) {
            assert!((s - t).abs() < 1e-12 * theirs[0]);
        }
        assert!(fro(&(ours.reconstruct() - &a)) < 1e-12 * fro(&a));
    }
}

#[test]
fn rank_deficient_span_projection() {
    // third vector is the sum of the first two
    let a = vec![1.0, 0.0, 2.0, 0.0];
    let b = vec![0.0, 1.0, 0.0, 0.0];
    let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let t = vec![3.0, -1.0, 1.0, 5.0];
    let p = project_onto_span(&[&a, &b, &c], &t).unwrap();
    let q = project_onto_span(&[&a, &b], &t).unwrap();
    for (x, y) in p.iter().zip(&q) {
        assert!((x - y).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn find_orth_matches_normal_equations(seed in 0u64..100_000, bins in 3usize..16, frames in 4usize..40,
                                          fraction in 0.5f64..0.99) {
        let mut r = rng(seed);
        let ys = random_matrix(&mut r, bins, frames, 0.0, 1.0);
        let yn = random_matrix(&mut r, bins, frames + 3, 0.0, 1.0);
        let ours = find_orth(&ys, &yn, fraction).unwrap();
        let theirs = ref_find_orth(&ys, &yn, fraction);
        prop_assert!(fro(&(&ours - &theirs)) <= 1e-9 * fro(&yn).max(1.0));
    }
}
