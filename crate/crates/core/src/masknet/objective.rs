//! Training objectives over masked predictions.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::network::NetOutputs;
use crate::error::{Error, Result};

/// Which objective a network is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// Both heads reconstruct their own source and are pushed away from the
    /// other one:
    /// `1/2 (|y1 - t1|^2 + |y2 - t2|^2 - g |y1 - t2|^2 - g |y2 - t1|^2)`.
    Joint { gamma: f64 },
    /// Source reconstruction, weighted interferer reconstruction, and a
    /// repulsion of the source estimate from the orthogonal interferer part:
    /// `1/2 (|ys - ts|^2 + mu |yn - tn|^2 - g |ts - yno|^2)`.
    Discriminative { mu: f64, gamma: f64 },
}

/// Frame-aligned targets. For the joint objective `source`/`interferer` are
/// `y1`/`y2` and `interferer_orth` is unused.
#[derive(Debug, Clone)]
pub struct Targets {
    pub source: Array2<f64>,
    pub interferer: Array2<f64>,
    pub interferer_orth: Option<Array2<f64>>,
}

impl Targets {
    pub fn joint(y1: Array2<f64>, y2: Array2<f64>) -> Self {
        Self {
            source: y1,
            interferer: y2,
            interferer_orth: None,
        }
    }

    pub fn discriminative(ys: Array2<f64>, yn: Array2<f64>, yn_o: Array2<f64>) -> Self {
        Self {
            source: ys,
            interferer: yn,
            interferer_orth: Some(yn_o),
        }
    }

    pub fn frames(&self) -> usize {
        self.source.ncols()
    }

    /// Column subset, in the given order.
    pub fn select_frames(&self, cols: &[usize]) -> Targets {
        let pick = |m: &Array2<f64>| m.select(ndarray::Axis(1), cols);
        Targets {
            source: pick(&self.source),
            interferer: pick(&self.interferer),
            interferer_orth: self.interferer_orth.as_ref().map(pick),
        }
    }

    fn check(&self, dim: (usize, usize)) -> Result<()> {
        let mut shapes = vec![("source", self.source.dim()), ("interferer", self.interferer.dim())];
        if let Some(o) = &self.interferer_orth {
            shapes.push(("orthogonal interferer", o.dim()));
        }
        for (name, s) in shapes {
            if s != dim {
                return Err(Error::ShapeMismatch(format!("{name} target {s:?} vs output {dim:?}")));
            }
        }
        Ok(())
    }
}

fn sq_dist(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y))
}

fn same_shape(mats: &[&Array2<f64>]) -> Result<()> {
    let d = mats[0].dim();
    if mats.iter().any(|m| m.dim() != d) {
        let dims: Vec<_> = mats.iter().map(|m| m.dim()).collect();
        return Err(Error::ShapeMismatch(format!("objective operands {dims:?}")));
    }
    Ok(())
}

pub fn objective_joint(y1: &Array2<f64>, y2: &Array2<f64>, out: &NetOutputs, gamma: f64) -> Result<f64> {
    let (t1, t2) = (&out.y_tilde_s, &out.y_tilde_n);
    same_shape(&[y1, y2, t1, t2])?;
    Ok(0.5 * (sq_dist(y1, t1) + sq_dist(y2, t2) - gamma * sq_dist(y1, t2) - gamma * sq_dist(y2, t1)))
}

pub fn objective_df(
    ys: &Array2<f64>,
    yn: &Array2<f64>,
    yn_o: &Array2<f64>,
    out: &NetOutputs,
    mu: f64,
    gamma: f64,
) -> Result<f64> {
    if mu < 0.0 || gamma < 0.0 {
        return Err(Error::InvalidArgument(format!("negative weight mu={mu} gamma={gamma}")));
    }
    let (ts, tn) = (&out.y_tilde_s, &out.y_tilde_n);
    same_shape(&[ys, yn, yn_o, ts, tn])?;
    Ok(0.5 * (sq_dist(ys, ts) + mu * sq_dist(yn, tn) - gamma * sq_dist(ts, yn_o)))
}

impl Objective {
    pub fn evaluate(&self, targets: &Targets, out: &NetOutputs) -> Result<f64> {
        match *self {
            Objective::Joint { gamma } => objective_joint(&targets.source, &targets.interferer, out, gamma),
            Objective::Discriminative { mu, gamma } => {
                let yn_o = orth(targets)?;
                objective_df(&targets.source, &targets.interferer, yn_o, out, mu, gamma)
            }
        }
    }

    /// `(dJ/d y_tilde_s, dJ/d y_tilde_n)`.
    pub fn output_gradients(&self, targets: &Targets, out: &NetOutputs) -> Result<(Array2<f64>, Array2<f64>)> {
        targets.check(out.y_tilde_s.dim())?;
        let (ts, tn) = (&out.y_tilde_s, &out.y_tilde_n);
        match *self {
            Objective::Joint { gamma } => {
                let (y1, y2) = (&targets.source, &targets.interferer);
                let g1 = Zip::from(ts).and(y1).and(y2).map_collect(|&t, &a, &b| (t - a) - gamma * (t - b));
                let g2 = Zip::from(tn).and(y2).and(y1).map_collect(|&t, &a, &b| (t - a) - gamma * (t - b));
                Ok((g1, g2))
            }
            Objective::Discriminative { mu, gamma } => {
                let yn_o = orth(targets)?;
                let gs = Zip::from(ts)
                    .and(&targets.source)
                    .and(yn_o)
                    .map_collect(|&t, &y, &o| (t - y) - gamma * (t - o));
                let gn = Zip::from(tn).and(&targets.interferer).map_collect(|&t, &y| mu * (t - y));
                Ok((gs, gn))
            }
        }
    }
}

fn orth(targets: &Targets) -> Result<&Array2<f64>> {
    targets
        .interferer_orth
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("discriminative objective needs the orthogonal interferer".into()))
}
