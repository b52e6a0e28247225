//! Grid search over the discrimination weight and ordered search over the
//! interferer weight.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ratios::ProbeNorms;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub gamma: f64,
    pub mu: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    /// Candidates for `mu`, strictly ascending.
    pub mu_set: Vec<f64>,
    /// Lower threshold on `r_s` that ends the `mu` search.
    pub rs_min: f64,
    /// Energy fraction kept in the source subspace.
    pub energy_fraction: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            mu: 0.0,
            gamma_min: 0.1,
            gamma_max: 0.5,
            gamma_step: 0.1,
            mu_set: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            rs_min: 8.0,
            energy_fraction: 0.95,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min <= self.gamma_max) || self.gamma_min < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma range [{}, {}] is empty or negative",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(self.gamma_step > 0.0) {
            return Err(Error::InvalidArgument("gamma_step must be positive".into()));
        }
        if self.mu_set.is_empty() {
            return Err(Error::InvalidArgument("mu_set is empty".into()));
        }
        if self.mu_set.windows(2).any(|w| w[0] >= w[1]) || self.mu_set[0] < 0.0 {
            return Err(Error::InvalidArgument("mu_set must be non-negative and strictly ascending".into()));
        }
        if !(self.rs_min >= 0.0 && self.rs_min.is_finite()) {
            return Err(Error::InvalidArgument("rs_min must be finite and non-negative".into()));
        }
        if !(self.energy_fraction > 0.0 && self.energy_fraction <= 1.0) {
            return Err(Error::InvalidArgument("energy_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// `gamma_min, gamma_min + step, ...` up to `gamma_max` inclusive.
    /// Grid points are rounded to 12 decimals so 0.1 + 2 * 0.1 reads as 0.3.
    pub fn gamma_grid(&self) -> Vec<f64> {
        let n = ((self.gamma_max - self.gamma_min) / self.gamma_step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| ((self.gamma_min + i as f64 * self.gamma_step) * 1e12).round() / 1e12)
            .collect()
    }
}

/// Result of training one candidate during the `gamma` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaOutcome {
    pub r_e: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Result of training one candidate during the `mu` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuOutcome {
    pub r_s: f64,
    pub r_n: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Trains and probes one hyper-parameter candidate. Implementations must be
/// deterministic in `(index, value)` so that parallel and sequential searches agree.
pub trait CandidateTrainer: Sync {
    fn gamma_candidate(&self, index: usize, gamma: f64) -> Result<GammaOutcome>;
    fn mu_candidate(&self, index: usize, gamma: f64, mu: f64) -> Result<MuOutcome>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaStep {
    pub gamma: f64,
    pub r_e: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuStep {
    pub mu: f64,
    pub r_s: f64,
    pub r_n: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
    /// Whether the stop rule (excluding exhaustion) holds at this step.
    pub stop_rule: bool,
}

/// Everything the automatic search saw, enough to re-check its decisions offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    pub gamma_grid: Vec<f64>,
    pub re_values: Vec<f64>,
    pub gamma_steps: Vec<GammaStep>,
    pub mu_steps: Vec<MuStep>,
    pub chosen_gamma: f64,
    pub chosen_mu: f64,
    /// Index into `mu_steps` where the search stopped.
    pub mu_stop_index: usize,
    /// The search ran off the end of `mu_set` without the rule firing.
    pub mu_exhausted: bool,
    /// Probe norms of the final model on the training sources.
    pub probe_norms: Option<ProbeNorms>,
    pub final_epochs: usize,
    pub final_loss: f64,
}

/// Index of the largest value; the first one wins ties.
pub fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if !(v > values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Trains one network per grid point and returns the `gamma` with the
/// largest error ratio.
pub fn sweep_gamma<T: CandidateTrainer>(trainer: &T, hp: &HyperParams) -> Result<(f64, Vec<GammaStep>)> {
    let grid = hp.gamma_grid();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty gamma grid".into()));
    }
    let steps = grid
        .par_iter()
        .enumerate()
        .map(|(i, &gamma)| {
            trainer.gamma_candidate(i, gamma).map(|o| GammaStep {
                gamma,
                r_e: o.r_e,
                epochs_run: o.epochs_run,
                final_loss: o.final_loss,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let re: Vec<f64> = steps.iter().map(|s| s.r_e).collect();
    let best = if grid.len() == 1 { 0 } else { first_argmax(&re).unwrap_or(0) };
    Ok((grid[best], steps))
}

/// The `mu` stop rule without the exhaustion clause:
/// `(L - 1) r_s <= r_n` or `r_s <= rs_min`.
pub fn mu_stop_rule(num_sources: usize, r_s: f64, r_n: f64, rs_min: f64) -> bool {
    (num_sources as f64 - 1.0) * r_s <= r_n || r_s <= rs_min
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuSearch {
    pub mu: f64,
    pub steps: Vec<MuStep>,
    pub stop_index: usize,
    pub exhausted: bool,
}

/// Walks `mu_set` in ascending order, training one network per value, and
/// stops at the first `mu` where the stop rule fires or at the last value.
///
/// With `exhaustive` set every value is still trained (for diagnostics), but
/// the returned `mu` is the one at which the search would have stopped.
pub fn find_mu<T: CandidateTrainer>(
    trainer: &T,
    gamma: f64,
    num_sources: usize,
    hp: &HyperParams,
    exhaustive: bool,
) -> Result<MuSearch> {
    if hp.mu_set.is_empty() {
        return Err(Error::InvalidArgument("empty mu_set".into()));
    }
    if num_sources < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 sources, got {num_sources}")));
    }
    let last = hp.mu_set.len() - 1;
    let mut steps = Vec::new();
    let mut stop: Option<usize> = None;
    for (k, &mu) in hp.mu_set.iter().enumerate() {
        let o = trainer.mu_candidate(k, gamma, mu)?;
        let fired = mu_stop_rule(num_sources, o.r_s, o.r_n, hp.rs_min);
        steps.push(MuStep {
            mu,
            r_s: o.r_s,
            r_n: o.r_n,
            epochs_run: o.epochs_run,
            final_loss: o.final_loss,
            stop_rule: fired,
        });
        if stop.is_none() && (fired || k == last) {
            stop = Some(k);
            if !exhaustive {
                break;
            }
        }
    }
    let stop_index = stop.expect("loop visits the last element");
    Ok(MuSearch {
        mu: hp.mu_set[stop_index],
        exhausted: !steps[stop_index].stop_rule,
        steps,
        stop_index,
    })
}
