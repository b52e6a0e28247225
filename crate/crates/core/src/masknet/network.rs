//! Forward pass through the mask layer and reverse-mode gradients.

use ndarray::{Array1, Array2, Axis, Zip};

use super::model::MaskNetModel;
use crate::error::{Error, Result};

/// Additive guard in the mask ratio; two silent heads give a 0.5/0.5 split.
pub const MASK_EPS: f64 = 1e-12;

/// Everything the network produces for one input (bins x frames).
#[derive(Debug, Clone)]
pub struct NetOutputs {
    /// Raw (ReLU) source head.
    pub y_hat_s: Array2<f64>,
    /// Raw (ReLU) interferer head.
    pub y_hat_n: Array2<f64>,
    pub m_s: Array2<f64>,
    pub m_n: Array2<f64>,
    /// `m_s * X`
    pub y_tilde_s: Array2<f64>,
    /// `m_n * X`
    pub y_tilde_n: Array2<f64>,
}

/// Soft masks from the two head activations. `m_n` is formed as `1 - m_s`.
pub fn masks_from_heads(y_hat_s: &Array2<f64>, y_hat_n: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let m_s = Zip::from(y_hat_s)
        .and(y_hat_n)
        .map_collect(|&a, &b| (a.abs() + MASK_EPS) / (a.abs() + b.abs() + 2.0 * MASK_EPS));
    let m_n = m_s.mapv(|m| 1.0 - m);
    (m_s, m_n)
}

/// Builds [`NetOutputs`] from given head activations, i.e. runs only the
/// weight-free masking layer.
pub fn apply_mask_layer(x: &Array2<f64>, y_hat_s: Array2<f64>, y_hat_n: Array2<f64>) -> Result<NetOutputs> {
    if y_hat_s.dim() != x.dim() || y_hat_n.dim() != x.dim() {
        return Err(Error::ShapeMismatch(format!(
            "heads {:?}/{:?} vs input {:?}",
            y_hat_s.dim(),
            y_hat_n.dim(),
            x.dim()
        )));
    }
    let (m_s, m_n) = masks_from_heads(&y_hat_s, &y_hat_n);
    let y_tilde_s = &m_s * x;
    let y_tilde_n = &m_n * x;
    Ok(NetOutputs {
        y_hat_s,
        y_hat_n,
        m_s,
        m_n,
        y_tilde_s,
        y_tilde_n,
    })
}

/// Intermediate activations kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    /// Input features after shift/scale, then post-ReLU activations of every layer.
    pub activations: Vec<Array2<f64>>,
    pub outputs: NetOutputs,
}

fn relu_in_place(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
}

pub(crate) fn forward_cached(model: &MaskNetModel, x: &Array2<f64>) -> Result<ForwardCache> {
    let bins = model.bins();
    if x.nrows() != bins {
        return Err(Error::ShapeMismatch(format!(
            "input has {} rows, model expects {bins}",
            x.nrows()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::ShapeMismatch("input has no frames".into()));
    }
    let shift = model.input_shift.view().insert_axis(Axis(1));
    let scale = model.input_scale.view().insert_axis(Axis(1));
    let features = (x - &shift) / scale;

    let mut activations = Vec::with_capacity(model.layers.len() + 1);
    activations.push(features);
    for (i, layer) in model.layers.iter().enumerate() {
        let prev = activations.last().expect("non-empty");
        let mut z = layer.weight.dot(prev);
        z += &layer.bias.view().insert_axis(Axis(1));
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("pre-activation of layer {i}")));
        }
        relu_in_place(&mut z);
        activations.push(z);
    }
    let heads = activations.last().expect("non-empty");
    let y_hat_s = heads.slice(ndarray::s![..bins, ..]).to_owned();
    let y_hat_n = heads.slice(ndarray::s![bins.., ..]).to_owned();
    let outputs = apply_mask_layer(x, y_hat_s, y_hat_n)?;
    Ok(ForwardCache {
        activations,
        outputs,
    })
}

/// Runs the network on a (bins x frames) magnitude matrix.
pub fn forward(model: &MaskNetModel, x: &Array2<f64>) -> Result<NetOutputs> {
    Ok(forward_cached(model, x)?.outputs)
}

/// Per-layer parameter gradients, same layout as [`MaskNetModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    /// Flattened in the order of [`MaskNetModel::flat_parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }
}

/// Backpropagates `dJ/d y_tilde_s` and `dJ/d y_tilde_n` through the mask
/// layer and the three ReLU layers.
///
/// The mask is differentiated with the quotient rule; ReLU has subgradient 0
/// at 0, which also covers the heads.
pub(crate) fn backprop(
    model: &MaskNetModel,
    x: &Array2<f64>,
    cache: &ForwardCache,
    grad_s: &Array2<f64>,
    grad_n: &Array2<f64>,
) -> Result<Gradients> {
    let bins = model.bins();
    let frames = x.ncols();
    let out = &cache.outputs;

    // d/da and d/db of the masked outputs, a and b being the head activations.
    let mut delta = Array2::<f64>::zeros((2 * bins, frames));
    {
        let (mut d_s, mut d_n) = delta.view_mut().split_at(Axis(0), bins);
        let diff = grad_s - grad_n;
        Zip::from(&mut d_s)
            .and(&mut d_n)
            .and(x)
            .and(&out.y_hat_s)
            .and(&out.y_hat_n)
            .and(&diff)
            .for_each(|ds, dn, &xv, &a, &b, &g| {
                let denom = a + b + 2.0 * MASK_EPS;
                let common = xv / (denom * denom) * g;
                // relu'(z) = 0 exactly where the activation is 0
                *ds = if a > 0.0 { common * (b + MASK_EPS) } else { 0.0 };
                *dn = if b > 0.0 { -common * (a + MASK_EPS) } else { 0.0 };
            });
    }

    let n_layers = model.layers.len();
    let mut weights = vec![Array2::zeros((0, 0)); n_layers];
    let mut biases = vec![Array1::zeros(0); n_layers];
    for i in (0..n_layers).rev() {
        let input = &cache.activations[i];
        weights[i] = delta.dot(&input.t());
        biases[i] = delta.sum_axis(Axis(1));
        if weights[i].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of layer {i}")));
        }
        if i > 0 {
            let mut prev = model.layers[i].weight.t().dot(&delta);
            Zip::from(&mut prev).and(input).for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
            delta = prev;
        }
    }
    Ok(Gradients { weights, biases })
}
