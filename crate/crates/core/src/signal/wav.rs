//! 16-bit PCM mono WAV I/O.

use std::path::Path;

use super::TimeSignal;
use crate::error::{Error, Result};

const FULL_SCALE: f64 = 32768.0;

fn wav_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Loads a 16-bit PCM mono WAV, scaling samples into `[-1, 1)`.
pub fn load_wav(path: impl AsRef<Path>) -> Result<TimeSignal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(wav_err(
            path,
            format!("mono required, file has {} channels", spec.channels),
        ));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(wav_err(
            path,
            format!(
                "16-bit PCM required, file is {:?} with {} bits",
                spec.sample_format, spec.bits_per_sample
            ),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / FULL_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_err(path, e.to_string()))?;
    TimeSignal::new(samples, spec.sample_rate).map_err(|e| wav_err(path, e.to_string()))
}

/// Writes a 16-bit PCM mono WAV, rounding and clipping at full scale.
pub fn save_wav(signal: &TimeSignal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e.to_string()))?;
    for &v in signal.samples() {
        let q = (v * FULL_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(q).map_err(|e| wav_err(path, e.to_string()))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e.to_string()))
}
