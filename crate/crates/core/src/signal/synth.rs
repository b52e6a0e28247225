//! Deterministic synthetic sources used as stand-ins for recorded speech.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::stft::hamming;
use super::TimeSignal;
use crate::error::{Error, Result};

/// Peak amplitude every synthesized source is normalized to.
const PEAK: f64 = 0.5;
const BANDPASS_TAPS: usize = 257;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SynthKind {
    /// `partials` harmonics of `f0` with 1/k amplitudes and seeded phases.
    /// Harmonics above Nyquist are dropped.
    Harmonic { f0: f64, partials: usize },
    /// Linear frequency sweep from `f_start` to `f_end` over the duration.
    Chirp { f_start: f64, f_end: f64 },
    /// Seeded Gaussian noise band-limited to `[low, high]` Hz.
    Bandnoise { low: f64, high: f64 },
}

pub fn synth_source(kind: &SynthKind, seed: u64, duration_secs: f64, sample_rate: u32) -> Result<TimeSignal> {
    if !(duration_secs > 0.0) || sample_rate == 0 {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_secs} s at {sample_rate} Hz"
        )));
    }
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    let len = (duration_secs * fs).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x = match *kind {
        SynthKind::Harmonic { f0, partials } => {
            if !(f0 > 0.0 && f0 < nyquist) {
                return Err(Error::InvalidArgument(format!(
                    "fundamental {f0} Hz outside (0, {nyquist}) Hz"
                )));
            }
            if partials == 0 {
                return Err(Error::InvalidArgument("need at least one partial".into()));
            }
            let comps: Vec<(f64, f64, f64)> = (1..=partials)
                .map(|k| (k as f64 * f0, 1.0 / k as f64, rng.random::<f64>() * 2.0 * PI))
                .filter(|&(f, _, _)| f < nyquist)
                .collect();
            (0..len)
                .map(|n| {
                    let t = n as f64 / fs;
                    comps.iter().map(|&(f, a, p)| a * (2.0 * PI * f * t + p).sin()).sum()
                })
                .collect::<Vec<f64>>()
        }
        SynthKind::Chirp { f_start, f_end } => {
            for f in [f_start, f_end] {
                if !(f > 0.0 && f <= nyquist) {
                    return Err(Error::InvalidArgument(format!(
                        "chirp frequency {f} Hz outside (0, {nyquist}] Hz"
                    )));
                }
            }
            let phase0 = rng.random::<f64>() * 2.0 * PI;
            let rate = (f_end - f_start) / duration_secs;
            (0..len)
                .map(|n| {
                    let t = n as f64 / fs;
                    (2.0 * PI * (f_start * t + 0.5 * rate * t * t) + phase0).sin()
                })
                .collect()
        }
        SynthKind::Bandnoise { low, high } => {
            if !(low >= 0.0 && low < high && high <= nyquist) {
                return Err(Error::InvalidArgument(format!(
                    "invalid band [{low}, {high}] Hz for Nyquist {nyquist} Hz"
                )));
            }
            let h = bandpass(low / fs, high / fs, BANDPASS_TAPS);
            let noise: Vec<f64> = (0..len + BANDPASS_TAPS - 1)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            (0..len)
                .map(|n| h.iter().enumerate().map(|(k, hk)| hk * noise[n + k]).sum())
                .collect()
        }
    };

    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= PEAK / peak);
    }
    TimeSignal::new(x, sample_rate)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc band-pass; edges are normalized frequencies (cycles/sample).
fn bandpass(lo: f64, hi: f64, taps: usize) -> Vec<f64> {
    let w = hamming(taps);
    let mid = (taps - 1) as f64 / 2.0;
    (0..taps)
        .map(|n| {
            let m = n as f64 - mid;
            (2.0 * hi * sinc(2.0 * hi * m) - 2.0 * lo * sinc(2.0 * lo * m)) * w[n]
        })
        .collect()
}
