//! Hamming-windowed STFT with 50% overlap and its overlap-add inverse.

use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::TimeSignal;
use crate::error::{Error, Result};

/// Floor on the overlap-added squared window in the inverse transform.
const WINDOW_SUM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    #[default]
    Hamming,
}

/// Framing parameters. The hop is always half the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawStftConfig", into = "RawStftConfig")]
pub struct StftConfig {
    window_len: usize,
    hop: usize,
    fft_len: usize,
    window_kind: WindowKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStftConfig {
    window_len: usize,
    fft_len: Option<usize>,
    #[serde(default)]
    window_kind: WindowKind,
}

impl TryFrom<RawStftConfig> for StftConfig {
    type Error = Error;

    fn try_from(raw: RawStftConfig) -> Result<Self> {
        StftConfig::new(raw.window_len, raw.fft_len.unwrap_or(raw.window_len))
    }
}

impl From<StftConfig> for RawStftConfig {
    fn from(c: StftConfig) -> Self {
        RawStftConfig {
            window_len: c.window_len,
            fft_len: Some(c.fft_len),
            window_kind: c.window_kind,
        }
    }
}

impl StftConfig {
    pub fn new(window_len: usize, fft_len: usize) -> Result<Self> {
        if window_len < 2 || !window_len.is_multiple_of(2) {
            return Err(Error::InvalidStft(format!(
                "window length must be even and >= 2, got {window_len}"
            )));
        }
        if fft_len < window_len {
            return Err(Error::InvalidStft(format!(
                "FFT length {fft_len} shorter than window {window_len}"
            )));
        }
        if !fft_len.is_multiple_of(2) {
            return Err(Error::InvalidStft(format!("FFT length {fft_len} must be even")));
        }
        Ok(Self {
            window_len,
            hop: window_len / 2,
            fft_len,
            window_kind: WindowKind::Hamming,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn window_kind(&self) -> WindowKind {
        self.window_kind
    }

    /// One-sided bin count, `fft_len / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    /// Number of whole frames that fit in `len` samples (no tail padding).
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }

    /// Length of the signal produced by [`istft`] for `frames` frames.
    pub fn output_len(&self, frames: usize) -> usize {
        (frames.saturating_sub(1)) * self.hop + self.window_len
    }

    pub fn window(&self) -> Vec<f64> {
        match self.window_kind {
            WindowKind::Hamming => hamming(self.window_len),
        }
    }
}

/// Symmetric Hamming window `0.54 - 0.46 cos(2 pi n / (len - 1))`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Complex one-sided STFT plus its magnitude and phase (bins x frames).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub complex_bins: Array2<Complex64>,
    pub magnitude: Array2<f64>,
    pub phase: Array2<f64>,
    pub config: StftConfig,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.magnitude.ncols()
    }

    pub fn bins(&self) -> usize {
        self.magnitude.nrows()
    }

    /// Builds a spectrogram from magnitude and phase; the complex bins are
    /// recomputed from the polar form.
    pub fn from_polar(magnitude: Array2<f64>, phase: Array2<f64>, config: StftConfig) -> Result<Self> {
        check_polar_shape(&magnitude, &phase, &config)?;
        let complex_bins = ndarray::Zip::from(&magnitude)
            .and(&phase)
            .map_collect(|&m, &p| Complex64::from_polar(m, p));
        Ok(Self {
            complex_bins,
            magnitude,
            phase,
            config,
        })
    }
}

fn check_polar_shape(magnitude: &Array2<f64>, phase: &Array2<f64>, config: &StftConfig) -> Result<()> {
    if magnitude.dim() != phase.dim() {
        return Err(Error::ShapeMismatch(format!(
            "magnitude {:?} vs phase {:?}",
            magnitude.dim(),
            phase.dim()
        )));
    }
    if magnitude.nrows() != config.bins() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows, expected {} bins for FFT length {}",
            magnitude.nrows(),
            config.bins(),
            config.fft_len
        )));
    }
    if magnitude.ncols() == 0 {
        return Err(Error::ShapeMismatch("spectrogram has no frames".into()));
    }
    Ok(())
}

/// Forward STFT. Frames that would run past the end of the signal are dropped.
pub fn stft(signal: &TimeSignal, config: &StftConfig) -> Result<Spectrogram> {
    let x = signal.samples();
    let frames = config.num_frames(x.len());
    if frames == 0 {
        return Err(Error::SignalTooShort {
            len: x.len(),
            needed: config.window_len,
        });
    }
    let bins = config.bins();
    let window = config.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(config.fft_len);

    let mut complex_bins = Array2::<Complex64>::zeros((bins, frames));
    let mut buf = vec![Complex64::new(0.0, 0.0); config.fft_len];
    for t in 0..frames {
        let start = t * config.hop;
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (n, w) in window.iter().enumerate() {
            buf[n].re = x[start + n] * w;
        }
        fft.process(&mut buf);
        for k in 0..bins {
            complex_bins[[k, t]] = buf[k];
        }
    }
    let magnitude = complex_bins.mapv(|c| c.norm());
    let phase = complex_bins.mapv(|c| c.arg());
    Ok(Spectrogram {
        complex_bins,
        magnitude,
        phase,
        config: *config,
    })
}

/// Overlap-add inverse from a magnitude and a phase matrix.
///
/// Each frame is inverse transformed, windowed again, and the sum is divided
/// by the overlap-added squared window, so `istft(stft(x))` returns `x` on
/// every covered sample.
pub fn istft(
    magnitude: &Array2<f64>,
    phase: &Array2<f64>,
    config: &StftConfig,
    sample_rate: u32,
) -> Result<TimeSignal> {
    check_polar_shape(magnitude, phase, config)?;
    let (bins, frames) = magnitude.dim();
    let n_fft = config.fft_len;
    let window = config.window();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);

    let out_len = config.output_len(frames);
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for t in 0..frames {
        for k in 0..bins {
            buf[k] = Complex64::from_polar(magnitude[[k, t]], phase[[k, t]]);
        }
        // Hermitian completion of the one-sided spectrum.
        for k in bins..n_fft {
            buf[k] = buf[n_fft - k].conj();
        }
        ifft.process(&mut buf);
        let start = t * config.hop;
        for (n, w) in window.iter().enumerate() {
            out[start + n] += buf[n].re / n_fft as f64 * w;
            norm[start + n] += w * w;
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        *o /= w.max(WINDOW_SUM_FLOOR);
    }
    TimeSignal::new(out, sample_rate)
}
