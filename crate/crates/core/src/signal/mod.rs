//! Time-domain signals, framing and spectral analysis.

mod container;
mod stft;
mod synth;
mod wav;

pub use container::{read_spectrogram, write_spectrogram};
pub use stft::{hamming, istft, stft, Spectrogram, StftConfig, WindowKind};
pub use synth::{synth_source, SynthKind};
pub use wav::{load_wav, save_wav};

use crate::error::{Error, Result};

/// A mono sampled waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("empty sample buffer".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Squared L2 norm of the samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// First `len` samples (or the whole signal if shorter).
    pub fn truncated(&self, len: usize) -> TimeSignal {
        let len = len.min(self.samples.len()).max(1);
        TimeSignal {
            samples: self.samples[..len].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSignal> {
        if start >= end || end > self.samples.len() {
            return Err(Error::InvalidArgument(format!(
                "slice [{start}, {end}) out of range for {} samples",
                self.samples.len()
            )));
        }
        Ok(TimeSignal {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        })
    }

    pub fn scaled(&self, factor: f64) -> TimeSignal {
        TimeSignal {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Elementwise sum over the common prefix of `signals`.
    pub fn sum(signals: &[&TimeSignal]) -> Result<TimeSignal> {
        let first = signals
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot sum an empty list".into()))?;
        check_rates(signals.iter().copied())?;
        let len = signals.iter().map(|s| s.len()).min().unwrap_or(0);
        let mut out = vec![0.0; len];
        for s in signals {
            for (o, v) in out.iter_mut().zip(&s.samples) {
                *o += v;
            }
        }
        TimeSignal::new(out, first.sample_rate)
    }
}

pub(crate) fn check_rates<'a>(signals: impl IntoIterator<Item = &'a TimeSignal>) -> Result<()> {
    let mut rate = None;
    for s in signals {
        match rate {
            None => rate = Some(s.sample_rate),
            Some(r) if r != s.sample_rate => {
                return Err(Error::InvalidSignal(format!(
                    "sample rate mismatch: {r} Hz vs {} Hz",
                    s.sample_rate
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Scales every source to the energy of the first one and sums them.
///
/// All sources are truncated to the shortest length first. Returns the mixture
/// together with the scaled sources, which are exactly the components the
/// mixture is made of.
pub fn mix_at_zero_db(sources: &[TimeSignal]) -> Result<(TimeSignal, Vec<TimeSignal>)> {
    if sources.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 sources to mix, got {}",
            sources.len()
        )));
    }
    check_rates(sources)?;
    let len = sources.iter().map(TimeSignal::len).min().unwrap_or(0);
    let truncated: Vec<TimeSignal> = sources.iter().map(|s| s.truncated(len)).collect();

    let reference = truncated[0].energy();
    let mut scaled = Vec::with_capacity(truncated.len());
    for (i, s) in truncated.iter().enumerate() {
        let e = s.energy();
        if e <= 0.0 {
            return Err(Error::InvalidSignal(format!("source {i} has zero energy")));
        }
        scaled.push(s.scaled((reference / e).sqrt()));
    }
    let refs: Vec<&TimeSignal> = scaled.iter().collect();
    let mixture = TimeSignal::sum(&refs)?;
    Ok((mixture, scaled))
}
