//! Experiment orchestration: data preparation, training, separation,
//! scoring and the files a run leaves behind.

mod config;
mod data;
mod run;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{
    disjoint_band_fixture, ConfigOverrides, ExperimentConfig, Mode, Preset, SourceInput, SourceSpec,
    DEFAULT_TRAIN_FRACTION,
};
pub use data::{load_sources, prepare, PreparedData};
pub use run::{
    compare, compare_to_dir, format_run_summary, run_experiment, run_to_dir, write_run_artifacts, CompareReport,
    ExperimentReport, JointSummary, RunOutcome, RunSettings, ScoreRow, StageTimings, SOURCE_SEED_STRIDE,
};

use crate::error::{Error, Result};
use crate::metrics::{evaluate_all, Evaluation};
use crate::signal::{load_wav, save_wav};
use crate::tune::TuneTrace;

/// Writes `source_<j>.wav` for every source in the config and returns the paths.
pub fn synth_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let sources = load_sources(cfg)?;
    std::fs::create_dir_all(dir)?;
    sources
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let p = dir.join(format!("source_{j}.wav"));
            save_wav(s, &p)?;
            Ok(p)
        })
        .collect()
}

/// Scores index-aligned estimate and reference WAV files.
pub fn eval_files(estimates: &[PathBuf], references: &[PathBuf]) -> Result<Evaluation> {
    if estimates.len() != references.len() {
        return Err(Error::InvalidArgument(format!(
            "{} estimates vs {} references",
            estimates.len(),
            references.len()
        )));
    }
    let est = estimates.iter().map(load_wav).collect::<Result<Vec<_>>>()?;
    let refs = references.iter().map(load_wav).collect::<Result<Vec<_>>>()?;
    evaluate_all(&est, &refs)
}

pub fn read_trace(path: &Path) -> Result<TuneTrace> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "trace",
        msg: e.to_string(),
    })
}

/// Human-readable rendering of a tuning trace.
pub fn format_trace(t: &TuneTrace) -> String {
    let mut out = String::from("gamma sweep (mu = 0)\n");
    let _ = writeln!(out, "  {:>6} {:>14} {:>7}", "gamma", "r_e", "epochs");
    for s in &t.gamma_steps {
        let mark = if s.gamma == t.chosen_gamma { " *" } else { "" };
        let _ = writeln!(out, "  {:>6.3} {:>14.6} {:>7}{mark}", s.gamma, s.r_e, s.epochs_run);
    }
    let _ = writeln!(out, "\nmu search at gamma {}", t.chosen_gamma);
    let _ = writeln!(out, "  {:>6} {:>14} {:>14} {:>7} {:>5}", "mu", "r_s", "r_n", "epochs", "stop");
    for (k, s) in t.mu_steps.iter().enumerate() {
        let mark = if k == t.mu_stop_index { " *" } else { "" };
        let _ = writeln!(
            out,
            "  {:>6.3} {:>14.6} {:>14.6} {:>7} {:>5}{mark}",
            s.mu,
            s.r_s,
            s.r_n,
            s.epochs_run,
            if s.stop_rule { "yes" } else { "no" }
        );
    }
    let _ = writeln!(
        out,
        "\nchosen gamma {}  mu {}{}",
        t.chosen_gamma,
        t.chosen_mu,
        if t.mu_exhausted { "  (mu set exhausted)" } else { "" }
    );
    let _ = writeln!(out, "final network: {} epochs, loss {:.6e}", t.final_epochs, t.final_loss);
    if let Some(p) = &t.probe_norms {
        let (rs, rn) = p.energy_ratios();
        let _ = writeln!(out, "final probes: r_e {:.6}  r_s {:.6}  r_n {:.6}", p.error_ratio(), rs, rn);
    }
    out
}
