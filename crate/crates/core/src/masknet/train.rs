//! Mini-batch first-order training.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::MaskNetModel;
use super::network::{backprop, forward, forward_cached, Gradients};
use super::objective::{Objective, Targets};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    PlainSgd,
    MomentumSgd,
    /// Per-parameter first/second moment estimates with bias correction.
    AdaptiveMoments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_frames: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub shuffle: bool,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Stop after this many consecutive epochs whose relative improvement is
    /// below `min_rel_improvement`. Zero disables early stopping.
    pub patience: usize,
    pub min_rel_improvement: f64,
    /// Per-bin standardization of the input features, fitted on the training input.
    pub standardize_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_frames: 10_000,
            epochs: 100,
            learning_rate: 1e-3,
            optimizer: Optimizer::AdaptiveMoments,
            seed: 0,
            shuffle: true,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            patience: 10,
            min_rel_improvement: 1e-7,
            standardize_inputs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_frames == 0 {
            return Err(Error::InvalidArgument("batch_frames must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MaskNetModel,
    /// Full-data objective after every completed epoch.
    pub loss_trace: Vec<f64>,
    pub epochs_run: usize,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_trace.last().copied()
    }
}

/// Loss and exact parameter gradients of `objective` on one batch.
pub fn gradient(
    model: &MaskNetModel,
    x: &Array2<f64>,
    targets: &Targets,
    objective: &Objective,
) -> Result<(f64, Gradients)> {
    let cache = forward_cached(model, x)?;
    let loss = objective.evaluate(targets, &cache.outputs)?;
    let (gs, gn) = objective.output_gradients(targets, &cache.outputs)?;
    let grads = backprop(model, x, &cache, &gs, &gn)?;
    Ok((loss, grads))
}

/// Parameter gradients for arbitrary upstream gradients on the masked outputs.
pub fn gradient_from_outputs(
    model: &MaskNetModel,
    x: &Array2<f64>,
    grad_s: &Array2<f64>,
    grad_n: &Array2<f64>,
) -> Result<Gradients> {
    let cache = forward_cached(model, x)?;
    if grad_s.dim() != x.dim() || grad_n.dim() != x.dim() {
        return Err(Error::ShapeMismatch("upstream gradients must match the input".into()));
    }
    backprop(model, x, &cache, grad_s, grad_n)
}

struct OptimizerState {
    kind: Optimizer,
    step: i32,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl OptimizerState {
    fn new(kind: Optimizer, n: usize) -> Self {
        Self {
            kind,
            step: 0,
            first: vec![0.0; n],
            second: if kind == Optimizer::AdaptiveMoments { vec![0.0; n] } else { Vec::new() },
        }
    }

    fn apply(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
        self.step += 1;
        let lr = cfg.learning_rate;
        match self.kind {
            Optimizer::PlainSgd => {
                params.iter_mut().zip(grads).for_each(|(p, g)| *p -= lr * g);
            }
            Optimizer::MomentumSgd => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    *v = cfg.momentum * *v + g;
                    *p -= lr * *v;
                }
            }
            Optimizer::AdaptiveMoments => {
                let c1 = 1.0 - cfg.beta1.powi(self.step);
                let c2 = 1.0 - cfg.beta2.powi(self.step);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
                    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
                }
            }
        }
    }
}

fn fit_standardization(model: &mut MaskNetModel, x: &Array2<f64>) {
    let mean = x.mean_axis(Axis(1)).expect("frames > 0");
    let std: Array1<f64> = x.std_axis(Axis(1), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    model.input_shift = mean;
    model.input_scale = std;
}

/// Trains a copy of `model` on frame-aligned `x` / `targets`.
///
/// Frames are shuffled once per epoch with a generator seeded from
/// `cfg.seed`; each mini-batch step uses the batch objective divided by the
/// batch length. The returned loss trace holds the full-data objective after
/// each epoch.
pub fn train(
    model: &MaskNetModel,
    x: &Array2<f64>,
    targets: &Targets,
    objective: &Objective,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let frames = x.ncols();
    if targets.frames() != frames {
        return Err(Error::ShapeMismatch(format!(
            "{} input frames vs {} target frames",
            frames,
            targets.frames()
        )));
    }
    // validates shapes
    objective.evaluate(targets, &forward(model, x)?)?;

    let mut model = model.clone();
    if cfg.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            loss_trace: Vec::new(),
            epochs_run: 0,
        });
    }
    if cfg.standardize_inputs {
        fit_standardization(&mut model, x);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..frames).collect();
    let mut params = model.flat_parameters();
    let mut opt = OptimizerState::new(cfg.optimizer, params.len());
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(cfg.batch_frames) {
            let (xb, tb) = if batch.len() == frames && !cfg.shuffle {
                (x.clone(), targets.clone())
            } else {
                (x.select(Axis(1), batch), targets.select_frames(batch))
            };
            let (_, mut grads) = gradient(&model, &xb, &tb, objective).map_err(|e| match e {
                Error::NonFinite(_) => Error::Diverged { epoch },
                other => other,
            })?;
            grads.scale(1.0 / batch.len() as f64);
            opt.apply(&mut params, &grads.flatten(), cfg);
            model.set_flat_parameters(&params);
        }

        let loss = match forward(&model, x) {
            Ok(out) => objective.evaluate(targets, &out)?,
            Err(Error::NonFinite(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        if let Some(&prev) = loss_trace.last() {
            let rel = (prev - loss) / f64::abs(prev).max(f64::MIN_POSITIVE);
            if rel < cfg.min_rel_improvement {
                stale += 1;
            } else {
                stale = 0;
            }
        }
        loss_trace.push(loss);
        if cfg.patience > 0 && stale >= cfg.patience {
            break;
        }
    }
    let epochs_run = loss_trace.len();
    Ok(TrainOutcome {
        model,
        loss_trace,
        epochs_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masknet::init_model;

    fn fixture() -> (Array2<f64>, Array2<f64>) {
        let x = Array2::from_shape_fn((6, 40), |(i, j)| ((i * 7 + j * 3) % 5) as f64 * 0.4 + 0.1);
        let y = x.mapv(|v| v * 0.6);
        (x, y)
    }

    #[test]
    fn zero_epochs_returns_model_unchanged() {
        let (x, y) = fixture();
        let m = init_model(6, 5, 5, 3);
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        let t = Targets::joint(y.clone(), &x - &y);
        let out = train(&m, &x, &t, &Objective::Joint { gamma: 0.1 }, &cfg).unwrap();
        assert_eq!(out.model, m);
        assert!(out.loss_trace.is_empty());
    }

    #[test]
    fn same_seeds_same_parameters() {
        let (x, y) = fixture();
        let m = init_model(6, 5, 5, 3);
        let cfg = TrainConfig { epochs: 8, batch_frames: 7, ..Default::default() };
        let t = Targets::joint(y.clone(), &x - &y);
        let a = train(&m, &x, &t, &Objective::Joint { gamma: 0.1 }, &cfg).unwrap();
        let b = train(&m, &x, &t, &Objective::Joint { gamma: 0.1 }, &cfg).unwrap();
        assert_eq!(a.model.flat_parameters(), b.model.flat_parameters());
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn every_optimizer_reduces_loss() {
        let (x, y) = fixture();
        let m = init_model(6, 8, 8, 11);
        let t = Targets::joint(y.clone(), &x - &y);
        for (opt, lr) in [
            (Optimizer::PlainSgd, 1e-2),
            (Optimizer::MomentumSgd, 5e-3),
            (Optimizer::AdaptiveMoments, 1e-2),
        ] {
            let cfg = TrainConfig {
                epochs: 30,
                batch_frames: 10,
                optimizer: opt,
                learning_rate: lr,
                ..Default::default()
            };
            let out = train(&m, &x, &t, &Objective::Joint { gamma: 0.0 }, &cfg).unwrap();
            let first = out.loss_trace[0];
            assert!(out.final_loss().unwrap() < first, "{opt:?}: {:?}", out.loss_trace);
        }
    }

    #[test]
    fn divergence_reports_epoch() {
        let (x, y) = fixture();
        let m = init_model(6, 5, 5, 3);
        let cfg = TrainConfig {
            epochs: 50,
            optimizer: Optimizer::PlainSgd,
            learning_rate: 1e300,
            ..Default::default()
        };
        let t = Targets::joint(y.clone(), &x - &y);
        let err = train(&m, &x, &t, &Objective::Joint { gamma: 0.1 }, &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn standardization_is_fitted_and_stored() {
        let (x, y) = fixture();
        let m = init_model(6, 5, 5, 3);
        let cfg = TrainConfig { epochs: 1, standardize_inputs: true, ..Default::default() };
        let t = Targets::joint(y.clone(), &x - &y);
        let out = train(&m, &x, &t, &Objective::Joint { gamma: 0.1 }, &cfg).unwrap();
        assert_ne!(out.model.input_shift, m.input_shift);
        assert!(out.model.input_scale.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn misaligned_frames_rejected() {
        let (x, y) = fixture();
        let m = init_model(6, 5, 5, 3);
        let t = Targets::joint(y.slice(ndarray::s![.., ..10]).to_owned(), y.slice(ndarray::s![.., ..10]).to_owned());
        assert!(train(&m, &x, &t, &Objective::Joint { gamma: 0.1 }, &TrainConfig::default()).is_err());
    }
}
