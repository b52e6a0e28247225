mod common;

use common::*;
use dfsep::masknet::{gradient, init_model, objective_df, objective_joint, forward, Objective, Targets};

#[test]
fn forward_matches_loop_reference() {
    let mut r = rng(3);
    let model = init_model(6, 7, 5, 11);
    let x = random_matrix(&mut r, 6, 5, 0.0, 2.0);
    let out = forward(&model, &x).unwrap();
    let (ts, tn) = ref_forward(&model, &x);
    for (a, b) in out.y_tilde_s.iter().zip(&ts).chain(out.y_tilde_n.iter().zip(&tn)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn objectives_match_elementwise_sums() {
    let mut r = rng(4);
    let model = init_model(4, 3, 3, 2);
    let x = random_matrix(&mut r, 4, 3, 0.0, 1.0);
    let y1 = random_matrix(&mut r, 4, 3, 0.0, 1.0);
    let y2 = random_matrix(&mut r, 4, 3, 0.0, 1.0);
    let yo = random_matrix(&mut r, 4, 3, -0.5, 0.5);
    let out = forward(&model, &x).unwrap();
    let j = objective_joint(&y1, &y2, &out, 0.3).unwrap();
    assert!((j - ref_joint_loss(&model, &x, &y1, &y2, 0.3)).abs() < 1e-12);
    let d = objective_df(&y1, &y2, &yo, &out, 2.0, 0.3).unwrap();
    assert!((d - ref_df_loss(&model, &x, &y1, &y2, &yo, 2.0, 0.3)).abs() < 1e-12);
}

#[test]
fn standardized_model_gradients_match_finite_differences() {
    let mut r = rng(5);
    let mut model = init_model(6, 8, 8, 9);
    model.input_shift = ndarray::Array1::from_vec(random_vec(&mut r, 6));
    model.input_scale.mapv_inplace(|_| 0.7);
    let x = random_matrix(&mut r, 6, 5, 0.0, 3.0);
    let ys = random_matrix(&mut r, 6, 5, 0.0, 2.0);
    let yn = random_matrix(&mut r, 6, 5, 0.0, 2.0);
    let yo = random_matrix(&mut r, 6, 5, -1.0, 1.0);
    let (mu, gamma) = (1.5, 0.2);
    let t = Targets::discriminative(ys.clone(), yn.clone(), yo.clone());
    let (_, g) = gradient(&model, &x, &t, &Objective::Discriminative { mu, gamma }).unwrap();
    let fd = finite_difference(&model, |m| ref_df_loss(m, &x, &ys, &yn, &yo, mu, gamma));
    let g = g.flatten();
    let floor = 1e-3 * g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = max_rel_error(&g, &fd, floor);
    assert!(err < 1e-4, "{err}");
}
