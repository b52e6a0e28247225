use rayon::prelude::*;

use super::config::{ExperimentConfig, SourceInput};
use crate::error::{Error, Result};
use crate::signal::{load_wav, mix_at_zero_db, synth_source, TimeSignal};

/// Level-matched training sources and the test mixture with its references.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train_sources: Vec<TimeSignal>,
    pub test_mixture: TimeSignal,
    pub test_references: Vec<TimeSignal>,
}

/// Synthesizes or reads every source in the config.
pub fn load_sources(cfg: &ExperimentConfig) -> Result<Vec<TimeSignal>> {
    cfg.sources
        .par_iter()
        .map(|s| match &s.input {
            SourceInput::Wav(path) => load_wav(path),
            SourceInput::Synth { spec, seed } => synth_source(spec, *seed, cfg.duration_secs, cfg.sample_rate),
        })
        .collect()
}

/// Splits each source time-wise at its train fraction and builds 0 dB
/// mixtures of the two parts separately.
pub fn prepare(cfg: &ExperimentConfig, sources: &[TimeSignal]) -> Result<PreparedData> {
    if sources.len() != cfg.sources.len() {
        return Err(Error::InvalidArgument(format!(
            "{} signals for {} source specs",
            sources.len(),
            cfg.sources.len()
        )));
    }
    let mut train = Vec::with_capacity(sources.len());
    let mut test = Vec::with_capacity(sources.len());
    for (s, spec) in sources.iter().zip(&cfg.sources) {
        let cut = (s.len() as f64 * spec.train_fraction).round() as usize;
        train.push(s.slice(0, cut)?);
        test.push(s.slice(cut, s.len())?);
    }
    let needed = cfg.stft.window_len();
    for (j, (a, b)) in train.iter().zip(&test).enumerate() {
        if a.len() < needed || b.len() < needed {
            return Err(Error::InvalidSignal(format!(
                "source {j}: train part of {} and test part of {} samples, each needs at least {needed}",
                a.len(),
                b.len()
            )));
        }
    }
    let (_, train_sources) = mix_at_zero_db(&train)?;
    let (test_mixture, test_references) = mix_at_zero_db(&test)?;
    Ok(PreparedData {
        train_sources,
        test_mixture,
        test_references,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_split_lengths() {
        let cfg = ExperimentConfig::desk_fixture();
        let src = load_sources(&cfg).unwrap();
        assert_eq!(src.len(), 2);
        assert_eq!(src[0].len(), 32000);
        let d = prepare(&cfg, &src).unwrap();
        assert_eq!(d.train_sources[0].len(), 24000);
        assert_eq!(d.test_mixture.len(), 8000);
        let e0 = d.test_references[0].energy();
        assert!((d.test_references[1].energy() - e0).abs() < 1e-9 * e0);
    }
}
