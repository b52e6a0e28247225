//! Binary spectrogram container.
//!
//! Layout (little-endian): `b"SPEC"`, then `version`, `bins`, `frames`,
//! `fft_len`, `hop` as `u32`, then the magnitude matrix and the phase matrix as
//! row-major `f64`.

use std::io::{Read, Write};

use ndarray::Array2;

use super::stft::{Spectrogram, StftConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPEC";
const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Format {
        kind: "spectrogram",
        msg: msg.into(),
    }
}

pub fn write_spectrogram<W: Write>(spec: &Spectrogram, mut w: W) -> Result<()> {
    let c = &spec.config;
    w.write_all(MAGIC)?;
    for v in [
        VERSION,
        spec.bins() as u32,
        spec.num_frames() as u32,
        c.fft_len() as u32,
        c.hop() as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for m in [&spec.magnitude, &spec.phase] {
        for v in m.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
    Ok(u32::from_le_bytes(b))
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let mut data = Vec::with_capacity(rows * cols);
    let mut b = [0u8; 8];
    for _ in 0..rows * cols {
        r.read_exact(&mut b).map_err(|_| bad("truncated payload"))?;
        data.push(f64::from_le_bytes(b));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| bad(e.to_string()))
}

/// Reads a spectrogram written by [`write_spectrogram`]. The window length is
/// recovered as twice the stored hop.
pub fn read_spectrogram<R: Read>(mut r: R) -> Result<Spectrogram> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let bins = read_u32(&mut r)? as usize;
    let frames = read_u32(&mut r)? as usize;
    let fft_len = read_u32(&mut r)? as usize;
    let hop = read_u32(&mut r)? as usize;
    let config = StftConfig::new(hop * 2, fft_len).map_err(|e| bad(e.to_string()))?;
    if bins != config.bins() {
        return Err(bad(format!("{bins} bins inconsistent with FFT length {fft_len}")));
    }
    let magnitude = read_matrix(&mut r, bins, frames)?;
    let phase = read_matrix(&mut r, bins, frames)?;
    if magnitude.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
        return Err(bad("magnitude must be finite and non-negative"));
    }
    Spectrogram::from_polar(magnitude, phase, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{stft, TimeSignal};

    #[test]
    fn round_trip_bit_exact() {
        let c = StftConfig::new(64, 128).unwrap();
        let x: Vec<f64> = (0..1000).map(|n| (n as f64 * 0.05).sin()).collect();
        let s = stft(&TimeSignal::new(x, 8000).unwrap(), &c).unwrap();
        let mut buf = Vec::new();
        write_spectrogram(&s, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SPEC");
        assert_eq!(buf.len(), 4 + 5 * 4 + 2 * 8 * s.bins() * s.num_frames());
        let back = read_spectrogram(&buf[..]).unwrap();
        assert_eq!(back.magnitude, s.magnitude);
        assert_eq!(back.phase, s.phase);
        assert_eq!(back.config, c);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_spectrogram(&b"SPEX"[..]).is_err());
        assert!(read_spectrogram(&b"SPEC\x01\x00\x00\x00"[..]).is_err());
    }
}
