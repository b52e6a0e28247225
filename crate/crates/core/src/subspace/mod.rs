//! Principal subspaces of source spectrograms and orthogonal projections.

mod svd;

pub use svd::{thin_svd, SvdResult};

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Relative singular-value cut-off used by [`SpanProjector`].
pub const PINV_RCOND: f64 = 1e-12;

/// Orthonormal basis of the dominant left singular subspace of a
/// row-centred source spectrogram.
#[derive(Debug, Clone)]
pub struct SourceBasis {
    /// `bins x rank`, orthonormal columns.
    pub basis: Array2<f64>,
    pub rank: usize,
    pub energy_fraction: f64,
    /// Per-bin mean removed before the decomposition.
    pub row_mean: Array1<f64>,
}

impl SourceBasis {
    /// Computes the basis from a (bins x frames) source magnitude matrix.
    ///
    /// Each row is centred on its mean across frames, then the smallest number
    /// of leading left singular vectors holding `energy_fraction` of the
    /// squared singular value mass is kept.
    pub fn from_source(ys: &Array2<f64>, energy_fraction: f64) -> Result<Self> {
        let row_mean = ys
            .mean_axis(Axis(1))
            .ok_or_else(|| Error::ShapeMismatch("source matrix has no frames".into()))?;
        let centred = ys - &row_mean.view().insert_axis(Axis(1));
        let svd = thin_svd(&centred)?;
        let rank = energy_rank(svd.sigma.as_slice().expect("contiguous"), energy_fraction)?;
        let basis = svd.u.slice(ndarray::s![.., ..rank]).to_owned();
        Ok(Self {
            basis,
            rank,
            energy_fraction,
            row_mean,
        })
    }

    /// `Y - S S^T Y`: the part of `y` orthogonal to the basis, column by column.
    pub fn orthogonal_complement(&self, y: &Array2<f64>) -> Result<Array2<f64>> {
        if y.nrows() != self.basis.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows against a basis of dimension {}",
                y.nrows(),
                self.basis.nrows()
            )));
        }
        let coeff = self.basis.t().dot(y);
        Ok(y - &self.basis.dot(&coeff))
    }
}

/// Smallest `d` such that the first `d` squared singular values hold at least
/// `fraction` of the total.
pub fn energy_rank(sigma: &[f64], fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "energy fraction {fraction} outside (0, 1]"
        )));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidArgument("singular values must be finite and >= 0".into()));
    }
    if sigma.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("singular values must be non-increasing".into()));
    }
    // The running sum and the total use the same summation order so that
    // fraction = 1 stops exactly at the last positive value.
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let need = fraction * total;
    let mut acc = 0.0;
    for (i, s) in sigma.iter().enumerate() {
        acc += s * s;
        if acc >= need {
            return Ok(i + 1);
        }
    }
    Ok(sigma.len())
}

/// Component of the interferer spectrogram `yn` orthogonal to the principal
/// subspace of the source spectrogram `ys`.
///
/// The basis is taken from the row-centred source, while `yn` itself is
/// projected without centring.
pub fn find_orth(ys: &Array2<f64>, yn: &Array2<f64>, energy_fraction: f64) -> Result<Array2<f64>> {
    if ys.nrows() != yn.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "source has {} bins, interferer {}",
            ys.nrows(),
            yn.nrows()
        )));
    }
    SourceBasis::from_source(ys, energy_fraction)?.orthogonal_complement(yn)
}

/// Orthogonal projector onto the span of a set of vectors.
///
/// Built from a thin SVD of the stacked basis; directions with singular values
/// below `max(len, count) * sigma_max * 1e-12` are dropped, which gives the
/// truncated pseudo-inverse behaviour for (nearly) collinear inputs.
#[derive(Debug, Clone)]
pub struct SpanProjector {
    /// `len x rank` orthonormal columns.
    q: Array2<f64>,
}

impl SpanProjector {
    pub fn new(basis: &[&[f64]]) -> Result<Self> {
        let len = basis
            .first()
            .map(|b| b.len())
            .ok_or_else(|| Error::InvalidArgument("empty basis".into()))?;
        if len == 0 {
            return Err(Error::InvalidArgument("zero-length basis vectors".into()));
        }
        if let Some(b) = basis.iter().find(|b| b.len() != len) {
            return Err(Error::ShapeMismatch(format!(
                "basis vector of length {} vs {len}",
                b.len()
            )));
        }
        let mut y = Array2::<f64>::zeros((len, basis.len()));
        for (j, b) in basis.iter().enumerate() {
            y.column_mut(j).iter_mut().zip(b.iter()).for_each(|(d, s)| *d = *s);
        }
        let svd = thin_svd(&y)?;
        let smax = svd.sigma[0];
        if smax == 0.0 {
            return Err(Error::InvalidArgument("basis vectors are all zero".into()));
        }
        let thresh = len.max(basis.len()) as f64 * smax * PINV_RCOND;
        let rank = svd.sigma.iter().take_while(|&&s| s > thresh).count();
        Ok(Self {
            q: svd.u.slice(ndarray::s![.., ..rank]).to_owned(),
        })
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn project(&self, target: &[f64]) -> Result<Vec<f64>> {
        if target.len() != self.q.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "target of length {} vs basis length {}",
                target.len(),
                self.q.nrows()
            )));
        }
        let t = ndarray::ArrayView1::from(target);
        let coeff = self.q.t().dot(&t);
        Ok(self.q.dot(&coeff).to_vec())
    }
}

/// Projection of `target` onto the span of `basis`.
pub fn project_onto_span(basis: &[&[f64]], target: &[f64]) -> Result<Vec<f64>> {
    SpanProjector::new(basis)?.project(target)
}
