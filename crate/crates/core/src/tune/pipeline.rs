//! One-vs-rest training with automatic hyper-parameter search, and separation.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ratios::{energy_ratios, error_ratio, ProbeNorms};
use super::search::{find_mu, sweep_gamma, CandidateTrainer, GammaOutcome, HyperParams, MuOutcome, TuneTrace};
use crate::error::{Error, Result};
use crate::masknet::{forward, init_model, train, MaskNetModel, Objective, Targets, TrainConfig};
use crate::signal::{istft, stft, StftConfig, TimeSignal};
use crate::subspace::find_orth;

/// Hidden layer widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arch {
    pub h1: usize,
    pub h2: usize,
}

/// Seeds of the independently initialized candidates: grid index `i` of
/// either search uses `base + i`, the final network `base + FINAL_OFFSET`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub base: u64,
}

impl SeedPlan {
    pub const FINAL_OFFSET: u64 = 200;

    pub fn gamma(&self, index: usize) -> u64 {
        self.base.wrapping_add(index as u64)
    }

    pub fn mu(&self, index: usize) -> u64 {
        self.base.wrapping_add(index as u64)
    }

    pub fn final_model(&self) -> u64 {
        self.base.wrapping_add(Self::FINAL_OFFSET)
    }
}

/// Frame-aligned magnitude spectrograms for one target source.
#[derive(Debug, Clone)]
pub struct TrainingSpectra {
    /// Target source.
    pub ys: Array2<f64>,
    /// Sum of all other sources, summed in the time domain before the STFT.
    pub yn: Array2<f64>,
    /// Mixture of all sources.
    pub x: Array2<f64>,
}

impl TrainingSpectra {
    /// `sources` are the (already level-matched) training sources.
    pub fn from_sources(sources: &[TimeSignal], target: usize, config: &StftConfig) -> Result<Self> {
        if sources.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 sources, got {}",
                sources.len()
            )));
        }
        if target >= sources.len() {
            return Err(Error::InvalidArgument(format!(
                "target index {target} out of range for {} sources",
                sources.len()
            )));
        }
        let others: Vec<&TimeSignal> = sources.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, s)| s).collect();
        let all: Vec<&TimeSignal> = sources.iter().collect();
        let interferer = TimeSignal::sum(&others)?;
        let mixture = TimeSignal::sum(&all)?;
        let len = mixture.len();
        let ys = stft(&sources[target].truncated(len), config)?.magnitude;
        let yn = stft(&interferer.truncated(len), config)?.magnitude;
        let x = stft(&mixture, config)?.magnitude;
        Ok(Self { ys, yn, x })
    }
}

/// Trains candidates on one set of training spectra.
pub struct DfDnnTrainer<'a> {
    pub spectra: &'a TrainingSpectra,
    pub yn_o: &'a Array2<f64>,
    pub arch: Arch,
    pub cfg: &'a TrainConfig,
    pub seeds: SeedPlan,
}

impl DfDnnTrainer<'_> {
    fn targets(&self) -> Targets {
        Targets::discriminative(self.spectra.ys.clone(), self.spectra.yn.clone(), self.yn_o.clone())
    }

    fn fit(&self, seed: u64, input: &Array2<f64>, objective: Objective) -> Result<crate::masknet::TrainOutcome> {
        let model = init_model(input.nrows(), self.arch.h1, self.arch.h2, seed);
        let cfg = TrainConfig { seed, ..self.cfg.clone() };
        train(&model, input, &self.targets(), &objective, &cfg)
    }

    /// Final network on the mixture at the chosen weights.
    pub fn train_final(&self, mu: f64, gamma: f64) -> Result<crate::masknet::TrainOutcome> {
        self.fit(self.seeds.final_model(), &self.spectra.x, Objective::Discriminative { mu, gamma })
    }
}

impl CandidateTrainer for DfDnnTrainer<'_> {
    fn gamma_candidate(&self, index: usize, gamma: f64) -> Result<GammaOutcome> {
        // The sweep feeds the isolated source, not the mixture.
        let out = self.fit(self.seeds.gamma(index), &self.spectra.ys, Objective::Discriminative { mu: 0.0, gamma })?;
        Ok(GammaOutcome {
            r_e: error_ratio(&out.model, &self.spectra.ys, &self.spectra.yn)?,
            epochs_run: out.epochs_run,
            final_loss: out.final_loss().unwrap_or(f64::NAN),
        })
    }

    fn mu_candidate(&self, index: usize, gamma: f64, mu: f64) -> Result<MuOutcome> {
        let out = self.fit(self.seeds.mu(index), &self.spectra.x, Objective::Discriminative { mu, gamma })?;
        let (r_s, r_n) = energy_ratios(&out.model, &self.spectra.ys, &self.spectra.yn)?;
        Ok(MuOutcome {
            r_s,
            r_n,
            epochs_run: out.epochs_run,
            final_loss: out.final_loss().unwrap_or(f64::NAN),
        })
    }
}

#[derive(Debug, Clone)]
pub struct DfDnnResult {
    pub model: MaskNetModel,
    pub hyper: HyperParams,
    pub trace: TuneTrace,
}

/// Options that do not change the algorithm's result except through seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub seeds: SeedPlan,
    /// Train every `mu` candidate even after the stop rule fired.
    pub exhaustive_mu: bool,
}

/// Full automatic training for one target: orthogonal interferer, `gamma`
/// sweep with `mu = 0`, `mu` search at the chosen `gamma`, final network.
pub fn train_df_dnn(
    spectra: &TrainingSpectra,
    num_sources: usize,
    arch: Arch,
    hp: &HyperParams,
    cfg: &TrainConfig,
    opts: SearchOptions,
) -> Result<DfDnnResult> {
    hp.validate()?;
    cfg.validate()?;
    if num_sources < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 sources, got {num_sources}")));
    }
    let bins = spectra.ys.nrows();
    if spectra.yn.nrows() != bins || spectra.x.nrows() != bins {
        return Err(Error::ShapeMismatch("training spectra disagree on bin count".into()));
    }
    let yn_o = find_orth(&spectra.ys, &spectra.yn, hp.energy_fraction)?;
    let trainer = DfDnnTrainer {
        spectra,
        yn_o: &yn_o,
        arch,
        cfg,
        seeds: opts.seeds,
    };
    let (gamma, gamma_steps) = sweep_gamma(&trainer, hp)?;
    let search = find_mu(&trainer, gamma, num_sources, hp, opts.exhaustive_mu)?;
    let fin = trainer.train_final(search.mu, gamma)?;
    let probe = ProbeNorms::measure(&fin.model, &spectra.ys, &spectra.yn)?;

    let hyper = HyperParams {
        gamma,
        mu: search.mu,
        ..hp.clone()
    };
    let trace = TuneTrace {
        gamma_grid: hp.gamma_grid(),
        re_values: gamma_steps.iter().map(|s| s.r_e).collect(),
        gamma_steps,
        mu_steps: search.steps,
        chosen_gamma: gamma,
        chosen_mu: search.mu,
        mu_stop_index: search.stop_index,
        mu_exhausted: search.exhausted,
        probe_norms: Some(probe),
        final_epochs: fin.epochs_run,
        final_loss: fin.final_loss().unwrap_or(f64::NAN),
    };
    Ok(DfDnnResult {
        model: fin.model,
        hyper,
        trace,
    })
}

/// Single two-head network trained with the joint objective at a fixed `gamma`.
pub fn train_joint(
    y1: &Array2<f64>,
    y2: &Array2<f64>,
    x: &Array2<f64>,
    arch: Arch,
    gamma: f64,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<crate::masknet::TrainOutcome> {
    let model = init_model(x.nrows(), arch.h1, arch.h2, seed);
    let cfg = TrainConfig { seed, ..cfg.clone() };
    train(&model, x, &Targets::joint(y1.clone(), y2.clone()), &Objective::Joint { gamma }, &cfg)
}

/// Both masked head outputs, resynthesized with the mixture phase.
pub fn separate_heads(model: &MaskNetModel, mixture: &TimeSignal, config: &StftConfig) -> Result<(TimeSignal, TimeSignal)> {
    let spec = stft(mixture, config)?;
    let out = forward(model, &spec.magnitude)?;
    let rate = mixture.sample_rate();
    Ok((
        istft(&out.y_tilde_s, &spec.phase, config, rate)?,
        istft(&out.y_tilde_n, &spec.phase, config, rate)?,
    ))
}

/// Estimate of a model's target source from a mixture.
pub fn separate_one(model: &MaskNetModel, mixture: &TimeSignal, config: &StftConfig) -> Result<TimeSignal> {
    let spec = stft(mixture, config)?;
    let out = forward(model, &spec.magnitude)?;
    istft(&out.y_tilde_s, &spec.phase, config, mixture.sample_rate())
}

/// One estimate per one-vs-rest model. The estimates are independent and
/// need not add up to the mixture.
pub fn separate_all(models: &[MaskNetModel], mixture: &TimeSignal, config: &StftConfig) -> Result<Vec<TimeSignal>> {
    if models.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need one model per source for at least 2 sources, got {}",
            models.len()
        )));
    }
    models.iter().map(|m| separate_one(m, mixture, config)).collect()
}
