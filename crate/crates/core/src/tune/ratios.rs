//! Probe ratios measured by feeding each training source through a network on its own.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masknet::{forward, MaskNetModel, NetOutputs};

/// Added to every ratio denominator.
pub const RATIO_EPS: f64 = 1e-12;
/// Ratios are clamped here so traces stay finite.
pub const RATIO_CAP: f64 = 1e12;

pub(crate) fn guarded_ratio(num: f64, den: f64) -> f64 {
    (num / (den + RATIO_EPS)).min(RATIO_CAP)
}

fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Frobenius norms of the four probe outputs.
///
/// The first letter names the input, the second the head: `sn` is the
/// interferer head's masked output when the source spectrogram is fed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeNorms {
    pub ss: f64,
    pub sn: f64,
    pub ns: f64,
    pub nn: f64,
    /// `|Ys - y_ss|`
    pub source_residual: f64,
    /// `|Yn - y_ns|`
    pub interferer_residual: f64,
}

impl ProbeNorms {
    /// Builds the norms from the network outputs on `ys` and on `yn`.
    pub fn from_outputs(ys: &Array2<f64>, yn: &Array2<f64>, on_source: &NetOutputs, on_interferer: &NetOutputs) -> Result<Self> {
        if on_source.y_tilde_s.dim() != ys.dim() || on_interferer.y_tilde_s.dim() != yn.dim() {
            return Err(Error::ShapeMismatch("probe outputs do not match their inputs".into()));
        }
        Ok(Self {
            ss: fro(&on_source.y_tilde_s),
            sn: fro(&on_source.y_tilde_n),
            ns: fro(&on_interferer.y_tilde_s),
            nn: fro(&on_interferer.y_tilde_n),
            source_residual: fro(&(ys - &on_source.y_tilde_s)),
            interferer_residual: fro(&(yn - &on_interferer.y_tilde_s)),
        })
    }

    pub fn measure(model: &MaskNetModel, ys: &Array2<f64>, yn: &Array2<f64>) -> Result<Self> {
        let bins = model.bins();
        if ys.nrows() != bins || yn.nrows() != bins {
            return Err(Error::ShapeMismatch(format!(
                "probe inputs have {}/{} bins, model expects {bins}",
                ys.nrows(),
                yn.nrows()
            )));
        }
        Self::from_outputs(ys, yn, &forward(model, ys)?, &forward(model, yn)?)
    }

    /// `|Yn - y_ns| / |Ys - y_ss|`
    pub fn error_ratio(&self) -> f64 {
        guarded_ratio(self.interferer_residual, self.source_residual)
    }

    /// `(|y_ss| / |y_sn|, |y_nn| / |y_ns|)`
    pub fn energy_ratios(&self) -> (f64, f64) {
        (guarded_ratio(self.ss, self.sn), guarded_ratio(self.nn, self.ns))
    }
}

/// How far the source head stays from the interferer when only the
/// interferer is fed in, relative to how well it reproduces the source when
/// only the source is fed in. Larger means less leakage.
pub fn error_ratio(model: &MaskNetModel, ys: &Array2<f64>, yn: &Array2<f64>) -> Result<f64> {
    Ok(ProbeNorms::measure(model, ys, yn)?.error_ratio())
}

/// Head-routing quality on isolated inputs: `(r_s, r_n)`.
pub fn energy_ratios(model: &MaskNetModel, ys: &Array2<f64>, yn: &Array2<f64>) -> Result<(f64, f64)> {
    Ok(ProbeNorms::measure(model, ys, yn)?.energy_ratios())
}
