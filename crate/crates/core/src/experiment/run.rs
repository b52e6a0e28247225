use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode, Preset, SourceSpec};
use super::data::{load_sources, prepare, PreparedData};
use crate::error::{Error, Result};
use crate::masknet::{MaskNetModel, TrainConfig};
use crate::metrics::{clamp_db, evaluate_all, format_score_csv, format_score_summary, AverageScore, Energies, Evaluation};
use crate::signal::{save_wav, stft, StftConfig, TimeSignal};
use crate::tune::{
    separate_all, separate_heads, train_df_dnn, train_joint, Arch, HyperParams, SearchOptions, SeedPlan,
    TrainingSpectra, TuneTrace,
};

/// Base seed offset between sources, so one-vs-rest trainings never share seeds.
pub const SOURCE_SEED_STRIDE: u64 = 1000;

/// The settings that determine a run's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub preset: Preset,
    pub base_seed: u64,
    pub sample_rate: u32,
    pub duration_secs: f64,
    pub stft: StftConfig,
    pub arch: Arch,
    pub train: TrainConfig,
    pub hyper: HyperParams,
    pub joint_gamma: f64,
    pub exhaustive_mu: bool,
    pub sources: Vec<SourceSpec>,
}

impl From<&ExperimentConfig> for RunSettings {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            preset: c.preset,
            base_seed: c.base_seed,
            sample_rate: c.sample_rate,
            duration_secs: c.duration_secs,
            stft: c.stft,
            arch: c.arch,
            train: c.train.clone(),
            hyper: c.hyper.clone(),
            joint_gamma: c.joint_gamma,
            exhaustive_mu: c.exhaustive_mu,
            sources: c.sources.clone(),
        }
    }
}

/// Scores with infinities clamped so the report stays numeric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub source_index: usize,
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
    pub energies: Energies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub gamma: f64,
    pub seed: u64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Wall-clock seconds per stage. Kept out of `report.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load: f64,
    /// One entry per trained network.
    pub train: Vec<f64>,
    pub separate: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub num_sources: usize,
    pub settings: RunSettings,
    pub train_samples: usize,
    pub test_samples: usize,
    pub scores: Vec<ScoreRow>,
    pub average: AverageScore,
    /// One entry per source in df-dnn mode, empty in joint mode.
    pub tuned: Vec<HyperParams>,
    pub traces: Vec<TuneTrace>,
    pub joint: Option<JointSummary>,
    #[serde(skip)]
    pub timings: StageTimings,
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub evaluation: Evaluation,
    /// `(file stem, model)`
    pub models: Vec<(String, MaskNetModel)>,
    pub estimates: Vec<TimeSignal>,
    pub data: PreparedData,
}

fn magnitude(s: &TimeSignal, c: &StftConfig) -> Result<Array2<f64>> {
    Ok(stft(s, c)?.magnitude)
}

struct Trained {
    models: Vec<(String, MaskNetModel)>,
    tuned: Vec<HyperParams>,
    traces: Vec<TuneTrace>,
    joint: Option<JointSummary>,
    secs: Vec<f64>,
}

fn train_models(cfg: &ExperimentConfig, data: &PreparedData) -> Result<Trained> {
    let l = cfg.num_sources();
    match cfg.mode {
        Mode::DfDnn => {
            let results = (0..l)
                .into_par_iter()
                .map(|j| {
                    let t = Instant::now();
                    let spectra = TrainingSpectra::from_sources(&data.train_sources, j, &cfg.stft)?;
                    let opts = SearchOptions {
                        seeds: SeedPlan {
                            base: cfg.base_seed.wrapping_add(SOURCE_SEED_STRIDE * j as u64),
                        },
                        exhaustive_mu: cfg.exhaustive_mu,
                    };
                    let r = train_df_dnn(&spectra, l, cfg.arch, &cfg.hyper, &cfg.train, opts)?;
                    Ok((r, t.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = Trained {
                models: Vec::new(),
                tuned: Vec::new(),
                traces: Vec::new(),
                joint: None,
                secs: Vec::new(),
            };
            for (j, (r, secs)) in results.into_iter().enumerate() {
                out.models.push((format!("source_{j}"), r.model));
                out.tuned.push(r.hyper);
                out.traces.push(r.trace);
                out.secs.push(secs);
            }
            Ok(out)
        }
        Mode::Joint => {
            let t = Instant::now();
            let all: Vec<&TimeSignal> = data.train_sources.iter().collect();
            let mixture = TimeSignal::sum(&all)?;
            let y1 = magnitude(&data.train_sources[0], &cfg.stft)?;
            let y2 = magnitude(&data.train_sources[1], &cfg.stft)?;
            let x = magnitude(&mixture, &cfg.stft)?;
            let seed = SeedPlan { base: cfg.base_seed }.final_model();
            let out = train_joint(&y1, &y2, &x, cfg.arch, cfg.joint_gamma, &cfg.train, seed)?;
            let joint = JointSummary {
                gamma: cfg.joint_gamma,
                seed,
                epochs_run: out.epochs_run,
                final_loss: out.final_loss().unwrap_or(f64::NAN),
            };
            Ok(Trained {
                models: vec![("joint".into(), out.model)],
                tuned: Vec::new(),
                traces: Vec::new(),
                joint: Some(joint),
                secs: vec![t.elapsed().as_secs_f64()],
            })
        }
    }
}

/// Runs one experiment end to end without touching the file system
/// (apart from reading WAV sources).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let t = Instant::now();
    let sources = load_sources(cfg).map_err(|e| e.in_stage("load"))?;
    let data = prepare(cfg, &sources).map_err(|e| e.in_stage("load"))?;
    let load = t.elapsed().as_secs_f64();

    let trained = train_models(cfg, &data).map_err(|e| e.in_stage("train"))?;

    let t = Instant::now();
    let estimates = match cfg.mode {
        Mode::DfDnn => {
            let models: Vec<MaskNetModel> = trained.models.iter().map(|(_, m)| m.clone()).collect();
            separate_all(&models, &data.test_mixture, &cfg.stft)
        }
        Mode::Joint => separate_heads(&trained.models[0].1, &data.test_mixture, &cfg.stft).map(|(a, b)| vec![a, b]),
    }
    .map_err(|e| e.in_stage("separate"))?;
    let separate = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let evaluation = evaluate_all(&estimates, &data.test_references).map_err(|e| e.in_stage("score"))?;
    let score = t.elapsed().as_secs_f64();

    let scores = evaluation
        .per_source
        .iter()
        .enumerate()
        .map(|(j, s)| ScoreRow {
            source_index: j,
            sdr_db: clamp_db(s.sdr_db),
            sir_db: clamp_db(s.sir_db),
            sar_db: clamp_db(s.sar_db),
            energies: s.energies,
        })
        .collect();
    let a = evaluation.average;
    let report = ExperimentReport {
        mode: cfg.mode,
        num_sources: cfg.num_sources(),
        settings: cfg.into(),
        train_samples: data.train_sources[0].len(),
        test_samples: data.test_mixture.len(),
        scores,
        average: AverageScore {
            sdr_db: clamp_db(a.sdr_db),
            sir_db: clamp_db(a.sir_db),
            sar_db: clamp_db(a.sar_db),
        },
        tuned: trained.tuned,
        traces: trained.traces,
        joint: trained.joint,
        timings: StageTimings {
            load,
            train: trained.secs,
            separate,
            score,
        },
    };
    Ok(RunOutcome {
        report,
        evaluation,
        models: trained.models,
        estimates,
        data,
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format {
            kind: "JSON",
            msg: e.to_string(),
        })
}

/// Plain-text summary: tuned weights (or the joint setting) and the score table.
pub fn format_run_summary(report: &ExperimentReport, ev: &Evaluation) -> String {
    let mut out = String::new();
    let s = &report.settings;
    let _ = writeln!(
        out,
        "mode {}  preset {}  sources {}  seed {}",
        report.mode.as_str(),
        s.preset.as_str(),
        report.num_sources,
        s.base_seed
    );
    let _ = writeln!(
        out,
        "train {} samples, test {} samples at {} Hz",
        report.train_samples, report.test_samples, s.sample_rate
    );
    for (j, h) in report.tuned.iter().enumerate() {
        let _ = writeln!(out, "source {j}: gamma {}  mu {}", h.gamma, h.mu);
    }
    if let Some(j) = &report.joint {
        let _ = writeln!(out, "joint: gamma {}  epochs {}", j.gamma, j.epochs_run);
    }
    out.push('\n');
    out.push_str(&format_score_summary(ev));
    out
}

/// Writes `report.json`, `timings.json`, `scores.csv`, `summary.txt`,
/// `traces/`, `models/`, `estimates/`, `references/` and `mixture.wav` under `dir`.
pub fn write_run_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    let sub = |name: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        create_dir(&p)?;
        Ok(p)
    };
    create_dir(dir)?;
    let r = &outcome.report;
    write_file(&dir.join("report.json"), to_json(r)?)?;
    write_file(&dir.join("timings.json"), to_json(&r.timings)?)?;
    write_file(&dir.join("scores.csv"), format_score_csv(&outcome.evaluation))?;
    write_file(&dir.join("summary.txt"), format_run_summary(r, &outcome.evaluation))?;
    if !r.traces.is_empty() {
        let traces = sub("traces")?;
        for (j, t) in r.traces.iter().enumerate() {
            write_file(&traces.join(format!("source_{j}.json")), to_json(t)?)?;
        }
    }
    let models = sub("models")?;
    for (name, m) in &outcome.models {
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf)?;
        write_file(&models.join(format!("{name}.mnet")), buf)?;
    }
    let est = sub("estimates")?;
    for (j, e) in outcome.estimates.iter().enumerate() {
        save_wav(e, est.join(format!("source_{j}.wav")))?;
    }
    let refs = sub("references")?;
    for (j, e) in outcome.data.test_references.iter().enumerate() {
        save_wav(e, refs.join(format!("source_{j}.wav")))?;
    }
    save_wav(&outcome.data.test_mixture, dir.join("mixture.wav"))?;
    Ok(())
}

/// Runs and writes to `cfg.output_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = run_experiment(cfg)?;
    write_run_artifacts(&outcome, &cfg.output_dir).map_err(|e| e.in_stage("write"))?;
    Ok(outcome)
}

/// Averages of both modes on identical data and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub df_dnn: AverageScore,
    pub joint: AverageScore,
    pub df_dnn_per_source: Vec<ScoreRow>,
    pub joint_per_source: Vec<ScoreRow>,
}

impl CompareReport {
    /// `metric,df_dnn,joint` with one row per metric.
    pub fn to_csv(&self) -> String {
        let (d, j) = (&self.df_dnn, &self.joint);
        format!(
            "metric,df_dnn,joint\nsdr_db,{:.6},{:.6}\nsir_db,{:.6},{:.6}\nsar_db,{:.6},{:.6}\n",
            d.sdr_db, j.sdr_db, d.sir_db, j.sir_db, d.sar_db, j.sar_db
        )
    }

    pub fn to_text(&self) -> String {
        let (d, j) = (&self.df_dnn, &self.joint);
        let mut out = format!("{:<8} {:>10} {:>10}\n", "metric", "DF-DNN", "joint");
        for (name, a, b) in [("SDR dB", d.sdr_db, j.sdr_db), ("SIR dB", d.sir_db, j.sir_db), ("SAR dB", d.sar_db, j.sar_db)] {
            let _ = writeln!(out, "{name:<8} {a:>10.3} {b:>10.3}");
        }
        out
    }
}

/// Runs `cfg` in both modes. Requires exactly two sources.
pub fn compare(cfg: &ExperimentConfig) -> Result<(CompareReport, RunOutcome, RunOutcome)> {
    if cfg.num_sources() != 2 {
        return Err(Error::Config(format!(
            "sources: compare needs exactly 2 sources, got {}",
            cfg.num_sources()
        )));
    }
    let df = run_experiment(&ExperimentConfig {
        mode: Mode::DfDnn,
        ..cfg.clone()
    })?;
    let joint = run_experiment(&ExperimentConfig {
        mode: Mode::Joint,
        ..cfg.clone()
    })?;
    let report = CompareReport {
        df_dnn: df.report.average,
        joint: joint.report.average,
        df_dnn_per_source: df.report.scores.clone(),
        joint_per_source: joint.report.scores.clone(),
    };
    Ok((report, df, joint))
}

/// Compare and write `df-dnn/`, `joint/`, `compare.csv`, `compare.txt` under `cfg.output_dir`.
pub fn compare_to_dir(cfg: &ExperimentConfig) -> Result<CompareReport> {
    let (report, df, joint) = compare(cfg)?;
    let dir = &cfg.output_dir;
    let write = || -> Result<()> {
        write_run_artifacts(&df, &dir.join("df-dnn"))?;
        write_run_artifacts(&joint, &dir.join("joint"))?;
        write_file(&dir.join("compare.csv"), report.to_csv())?;
        write_file(&dir.join("compare.txt"), report.to_text())?;
        write_file(&dir.join("compare.json"), to_json(&report)?)
    };
    write().map_err(|e| e.in_stage("write"))?;
    Ok(report)
}
