//! Projection-based SDR/SIR/SAR.
//!
//! An estimate is split into the part explained by its own reference, the
//! part explained by the other references, and the rest. Whole-signal
//! projections are used, with no filtering allowance.

mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{clamp_db, format_score_csv, format_score_summary, REPORT_CLAMP_DB};

use crate::error::{Error, Result};
use crate::signal::{check_rates, TimeSignal};
use crate::subspace::SpanProjector;

/// Floor added to every score denominator.
pub const SCORE_EPS: f64 = 1e-30;
/// Scores above this are reported as `+inf` (the floor alone gives 300 dB).
pub const INF_THRESHOLD_DB: f64 = 250.0;

/// `estimate = s_target + e_interf + e_artif`.
#[derive(Debug, Clone, PartialEq)]
pub struct BssDecomposition {
    pub s_target: Vec<f64>,
    pub e_interf: Vec<f64>,
    pub e_artif: Vec<f64>,
}

impl BssDecomposition {
    pub fn len(&self) -> usize {
        self.s_target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_target.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub target: f64,
    pub interf: f64,
    pub artif: f64,
    /// Energy of the estimate projected on all references.
    pub projected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BssScore {
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
    pub energies: Energies,
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Splits `estimate` against `references`, `j` being the estimate's own
/// reference. All signals must have the same length.
pub fn decompose(estimate: &[f64], references: &[&[f64]], j: usize) -> Result<BssDecomposition> {
    if j >= references.len() {
        return Err(Error::InvalidArgument(format!(
            "reference index {j} out of range for {} references",
            references.len()
        )));
    }
    let n = estimate.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty estimate".into()));
    }
    if let Some(r) = references.iter().find(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "reference of length {} vs estimate of length {n}",
            r.len()
        )));
    }
    if references[j].iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument(format!("reference {j} is all zero")));
    }
    let own = SpanProjector::new(&references[j..=j])?.project(estimate)?;
    let all = SpanProjector::new(references)?.project(estimate)?;
    let e_interf = all.iter().zip(&own).map(|(a, o)| a - o).collect();
    let e_artif = estimate.iter().zip(&all).map(|(e, a)| e - a).collect();
    Ok(BssDecomposition {
        s_target: own,
        e_interf,
        e_artif,
    })
}

fn db(num: f64, den: f64) -> f64 {
    let v = 10.0 * (num / (den + SCORE_EPS)).log10();
    if v > INF_THRESHOLD_DB {
        f64::INFINITY
    } else if v < -INF_THRESHOLD_DB {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Scores a decomposition. A target energy at or below the floor makes all
/// three scores `-inf`.
pub fn score(d: &BssDecomposition) -> BssScore {
    let target = energy(&d.s_target);
    let interf = energy(&d.e_interf);
    let artif = energy(&d.e_artif);
    let projected: f64 = d.s_target.iter().zip(&d.e_interf).map(|(s, i)| (s + i) * (s + i)).sum();
    let distortion: f64 = d.e_interf.iter().zip(&d.e_artif).map(|(i, a)| (i + a) * (i + a)).sum();
    let energies = Energies {
        target,
        interf,
        artif,
        projected,
    };
    if target <= SCORE_EPS {
        return BssScore {
            sdr_db: f64::NEG_INFINITY,
            sir_db: f64::NEG_INFINITY,
            sar_db: f64::NEG_INFINITY,
            energies,
        };
    }
    BssScore {
        sdr_db: db(target, distortion),
        sir_db: db(target, interf),
        sar_db: db(projected, artif),
        energies,
    }
}

/// Arithmetic means of the three scores across sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageScore {
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
}

impl AverageScore {
    pub fn of(scores: &[BssScore]) -> Self {
        let n = scores.len() as f64;
        let mean = |f: fn(&BssScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
        Self {
            sdr_db: mean(|s| s.sdr_db),
            sir_db: mean(|s| s.sir_db),
            sar_db: mean(|s| s.sar_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_source: Vec<BssScore>,
    pub average: AverageScore,
}

/// Scores estimate `j` against all references, for every `j`. Signals are
/// truncated to their common length.
pub fn evaluate_all(estimates: &[TimeSignal], references: &[TimeSignal]) -> Result<Evaluation> {
    if estimates.len() != references.len() {
        return Err(Error::InvalidArgument(format!(
            "{} estimates vs {} references",
            estimates.len(),
            references.len()
        )));
    }
    if references.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    check_rates(estimates.iter().chain(references))?;
    let len = estimates.iter().chain(references).map(TimeSignal::len).min().unwrap_or(0);
    if len < references.len() {
        return Err(Error::SignalTooShort {
            len,
            needed: references.len(),
        });
    }
    let refs: Vec<&[f64]> = references.iter().map(|r| &r.samples()[..len]).collect();
    let per_source = estimates
        .par_iter()
        .enumerate()
        .map(|(j, e)| decompose(&e.samples()[..len], &refs, j).map(|d| score(&d)))
        .collect::<Result<Vec<_>>>()?;
    let average = AverageScore::of(&per_source);
    Ok(Evaluation { per_source, average })
}
