use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One affine layer, `out = weight . in + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Two hidden ReLU layers followed by a ReLU output of width `2 * bins`:
/// the first half is the source head, the second half the interferer head.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskNetModel {
    /// `[bins, h1, h2, 2 * bins]`
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Dense>,
    /// Features are `(x - input_shift) / input_scale` before the first layer.
    /// Identity unless per-bin standardization was requested at training time.
    pub input_shift: Array1<f64>,
    pub input_scale: Array1<f64>,
    pub seed: u64,
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(bins: usize, h1: usize, h2: usize, seed: u64) -> MaskNetModel {
    assert!(bins >= 1 && h1 >= 1 && h2 >= 1, "layer widths must be positive");
    let dims = vec![bins, h1, h2, 2 * bins];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-a..a));
            Dense {
                weight,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    MaskNetModel {
        layer_dims: dims,
        layers,
        input_shift: Array1::zeros(bins),
        input_scale: Array1::ones(bins),
        seed,
    }
}

impl MaskNetModel {
    pub fn bins(&self) -> usize {
        self.layer_dims[0]
    }

    /// Trainable parameters (weights and biases only).
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// All trainable parameters, layer by layer, weight (row-major) then bias.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_parameters(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.parameter_count());
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flat_parameters().iter().all(|p| p.is_finite())
            && self.input_shift.iter().chain(self.input_scale.iter()).all(|v| v.is_finite())
    }

    fn validate(&self) -> Result<()> {
        let d = &self.layer_dims;
        if d.len() != 4 || d[3] != 2 * d[0] || d.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer dims {d:?}")));
        }
        if self.layers.len() != 3 {
            return Err(Error::InvalidArgument("expected three affine layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_dim() != d[i] || l.out_dim() != d[i + 1] || l.bias.len() != d[i + 1] {
                return Err(Error::InvalidArgument(format!("layer {i} shape mismatch")));
            }
        }
        if self.input_shift.len() != d[0] || self.input_scale.len() != d[0] {
            return Err(Error::InvalidArgument("input scaling has wrong length".into()));
        }
        Ok(())
    }

    /// Writes the checkpoint format:
    /// `b"MNET"`, `version: u32`, `n_dims: u32`, `dims: [u32]`, then every
    /// layer's weight (row-major) and bias, the input shift and scale vectors
    /// as `f64`, and finally the seed as `u64`. All little-endian.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.layer_dims.len() as u32).to_le_bytes())?;
        for &d in &self.layer_dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for l in &self.layers {
            for v in l.weight.iter().chain(l.bias.iter()) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for v in self.input_shift.iter().chain(self.input_scale.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let bad = |msg: &str| Error::Format {
            kind: "checkpoint",
            msg: msg.to_string(),
        };
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        if &b4 != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        if u32::from_le_bytes(b4) != CHECKPOINT_VERSION {
            return Err(bad("unsupported version"));
        }
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        let n = u32::from_le_bytes(b4) as usize;
        if n != 4 {
            return Err(bad("expected four layer dimensions"));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
            dims.push(u32::from_le_bytes(b4) as usize);
        }
        let mut next = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8).map_err(|_| bad("truncated payload"))?;
            Ok(f64::from_le_bytes(b8))
        };
        let mut layers = Vec::new();
        for w in dims.windows(2) {
            let mut wv = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[0] * w[1] {
                wv.push(next(&mut r)?);
            }
            let mut bv = Vec::with_capacity(w[1]);
            for _ in 0..w[1] {
                bv.push(next(&mut r)?);
            }
            layers.push(Dense {
                weight: Array2::from_shape_vec((w[1], w[0]), wv).map_err(|e| bad(&e.to_string()))?,
                bias: Array1::from(bv),
            });
        }
        let mut shift = Vec::with_capacity(dims[0]);
        for _ in 0..dims[0] {
            shift.push(next(&mut r)?);
        }
        let mut scale = Vec::with_capacity(dims[0]);
        for _ in 0..dims[0] {
            scale.push(next(&mut r)?);
        }
        r.read_exact(&mut b8).map_err(|_| bad("truncated seed"))?;
        let model = MaskNetModel {
            layer_dims: dims,
            layers,
            input_shift: Array1::from(shift),
            input_scale: Array1::from(scale),
            seed: u64::from_le_bytes(b8),
        };
        model.validate().map_err(|e| bad(&e.to_string()))?;
        Ok(model)
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"MNET";
const CHECKPOINT_VERSION: u32 = 1;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = init_model(9, 5, 4, 17);
        let b = init_model(9, 5, 4, 17);
        assert_eq!(a, b);
        assert_ne!(a, init_model(9, 5, 4, 18));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&x| x == 0.0)));
        let bound = (6.0f64 / 14.0).sqrt();
        assert!(a.layers[0].weight.iter().all(|w| w.abs() < bound));
    }

    #[test]
    fn parameter_count_matches_widths() {
        let m = init_model(257, 150, 150, 0);
        assert_eq!(m.parameter_count(), 257 * 150 + 150 + 150 * 150 + 150 + 150 * 514 + 514);
        assert_eq!(m.layer_dims, vec![257, 150, 150, 514]);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut m = init_model(7, 3, 4, 99);
        m.input_shift[2] = 0.125;
        m.input_scale[1] = 3.0;
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"MNET");
        let back = MaskNetModel::read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        back.write_checkpoint(&mut again).unwrap();
        assert_eq!(buf, again);
        assert!(MaskNetModel::read_checkpoint(&buf[..buf.len() - 1]).is_err());
    }
}
