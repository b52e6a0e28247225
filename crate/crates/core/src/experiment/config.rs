//! Experiment configuration: TOML file, named presets, command-line overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masknet::TrainConfig;
use crate::signal::{StftConfig, SynthKind};
use crate::tune::{Arch, HyperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One auto-tuned network per source against the rest.
    #[default]
    DfDnn,
    /// A single two-head network with the joint objective at fixed `gamma`.
    Joint,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::DfDnn => "df-dnn",
            Mode::Joint => "joint",
        }
    }
}

/// Named bundles of sample rate, framing, layer widths and training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 8 kHz, 256-sample frames, 64 units per hidden layer. Runs in seconds.
    #[default]
    Desk,
    /// 16 kHz, 512-sample frames, 150 units.
    TimitLike,
    /// 44.1 kHz, 1024-sample frames, 300 units.
    TspLike,
}

impl Preset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::TimitLike => "timit-like",
            Preset::TspLike => "tsp-like",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "timit-like" => Ok(Preset::TimitLike),
            "tsp-like" => Ok(Preset::TspLike),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected desk, timit-like or tsp-like)"
            ))),
        }
    }

    pub fn sample_rate(&self) -> u32 {
        match self {
            Preset::Desk => 8000,
            Preset::TimitLike => 16000,
            Preset::TspLike => 44100,
        }
    }

    pub fn stft(&self) -> StftConfig {
        let n = match self {
            Preset::Desk => 256,
            Preset::TimitLike => 512,
            Preset::TspLike => 1024,
        };
        StftConfig::new(n, n).expect("preset framing is valid")
    }

    pub fn arch(&self) -> Arch {
        let h = match self {
            Preset::Desk => 64,
            Preset::TimitLike => 150,
            Preset::TspLike => 300,
        };
        Arch { h1: h, h2: h }
    }

    pub fn train(&self) -> TrainConfig {
        match self {
            // a few hundred frames per source, so small batches
            Preset::Desk => TrainConfig {
                batch_frames: 64,
                learning_rate: 2e-3,
                standardize_inputs: true,
                ..TrainConfig::default()
            },
            _ => TrainConfig {
                standardize_inputs: true,
                ..TrainConfig::default()
            },
        }
    }
}

/// Where a source's samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceInput {
    Wav(PathBuf),
    Synth { spec: SynthKind, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub input: SourceInput,
    /// Leading fraction of the signal used for training; the rest is the test part.
    pub train_fraction: f64,
}

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

impl SourceSpec {
    pub fn synth(spec: SynthKind, seed: u64) -> Self {
        Self {
            input: SourceInput::Synth { spec, seed },
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

/// The two-source fixture with non-overlapping bands: a 220 Hz harmonic
/// complex below 2 kHz and noise between 2.4 and 3.6 kHz.
pub fn disjoint_band_fixture() -> Vec<SourceSpec> {
    vec![
        SourceSpec::synth(SynthKind::Harmonic { f0: 220.0, partials: 8 }, 1),
        SourceSpec::synth(
            SynthKind::Bandnoise {
                low: 2400.0,
                high: 3600.0,
            },
            2,
        ),
    ]
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub preset: Preset,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Sample rate of synthesized sources.
    pub sample_rate: u32,
    /// Length of synthesized sources.
    pub duration_secs: f64,
    pub stft: StftConfig,
    pub arch: Arch,
    pub train: TrainConfig,
    pub hyper: HyperParams,
    pub joint_gamma: f64,
    /// Train every `mu` candidate and keep the full trace.
    pub exhaustive_mu: bool,
    pub sources: Vec<SourceSpec>,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    mode: Mode,
    preset: Option<Preset>,
    base_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    sample_rate: Option<u32>,
    duration_secs: Option<f64>,
    joint_gamma: Option<f64>,
    #[serde(default)]
    exhaustive_mu: bool,
    stft: Option<toml::Table>,
    arch: Option<toml::Table>,
    train: Option<toml::Table>,
    hyper: Option<toml::Table>,
    #[serde(default)]
    sources: Vec<RawSource>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    wav: Option<PathBuf>,
    synth: Option<SynthKind>,
    seed: Option<u64>,
    train_fraction: Option<f64>,
}

/// Overlays `table` on the serialized `base` and deserializes the result.
fn overlay<T: Clone + Serialize + DeserializeOwned>(section: &str, base: &T, table: Option<toml::Table>) -> Result<T> {
    let Some(table) = table else {
        return Ok(base.clone());
    };
    let mut merged = match toml::Value::try_from(base) {
        Ok(toml::Value::Table(t)) => t,
        _ => unreachable!("config sections serialize to tables"),
    };
    for (k, v) in table {
        merged.insert(k, v);
    }
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("[{section}]: {}", e.message())))
}

impl ExperimentConfig {
    /// Preset defaults with the given sources.
    pub fn from_preset(preset: Preset, sources: Vec<SourceSpec>) -> Self {
        Self {
            mode: Mode::DfDnn,
            preset,
            base_seed: 42,
            output_dir: PathBuf::from("out"),
            sample_rate: preset.sample_rate(),
            duration_secs: 4.0,
            stft: preset.stft(),
            arch: preset.arch(),
            train: preset.train(),
            hyper: HyperParams::default(),
            joint_gamma: 0.1,
            exhaustive_mu: false,
            sources,
        }
    }

    /// Desk preset on the two-source disjoint-band fixture.
    pub fn desk_fixture() -> Self {
        Self::from_preset(Preset::Desk, disjoint_band_fixture())
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    /// Reads a TOML file. Relative WAV paths are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>, overrides: &ConfigOverrides) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base_dir, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml_str(text: &str, base_dir: &Path, overrides: &ConfigOverrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let preset = overrides.preset.or(raw.preset).unwrap_or_default();
        let defaults = Self::from_preset(preset, Vec::new());

        let mut stft_table = raw.stft;
        if let Some(t) = stft_table.as_mut() {
            if t.contains_key("window_len") && !t.contains_key("fft_len") {
                let w = t["window_len"].clone();
                t.insert("fft_len".into(), w);
            }
        }
        let stft = overlay("stft", &defaults.stft, stft_table)?;
        let arch = overlay("arch", &defaults.arch, raw.arch)?;
        let train = overlay("train", &defaults.train, raw.train)?;
        let hyper = overlay("hyper", &defaults.hyper, raw.hyper)?;

        let mut sources = Vec::with_capacity(raw.sources.len());
        for (j, s) in raw.sources.into_iter().enumerate() {
            let input = match (s.wav, s.synth) {
                (Some(p), None) => {
                    if s.seed.is_some() {
                        return Err(Error::Config(format!("sources[{j}].seed: only valid with `synth`")));
                    }
                    SourceInput::Wav(if p.is_relative() { base_dir.join(p) } else { p })
                }
                (None, Some(spec)) => SourceInput::Synth {
                    spec,
                    seed: s.seed.unwrap_or(j as u64 + 1),
                },
                _ => {
                    return Err(Error::Config(format!(
                        "sources[{j}]: exactly one of `wav` or `synth` is required"
                    )))
                }
            };
            sources.push(SourceSpec {
                input,
                train_fraction: s.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION),
            });
        }

        let cfg = Self {
            mode: raw.mode,
            preset,
            base_seed: overrides.seed.or(raw.base_seed).unwrap_or(defaults.base_seed),
            output_dir: overrides
                .out
                .clone()
                .or(raw.output_dir)
                .unwrap_or(defaults.output_dir),
            sample_rate: raw.sample_rate.unwrap_or(defaults.sample_rate),
            duration_secs: raw.duration_secs.unwrap_or(defaults.duration_secs),
            stft,
            arch,
            train,
            hyper,
            joint_gamma: raw.joint_gamma.unwrap_or(defaults.joint_gamma),
            exhaustive_mu: raw.exhaustive_mu,
            sources,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks cross-field constraints. All failures are [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |field: &str, e: Error| Error::Config(format!("{field}: {e}"));
        if self.sources.len() < 2 {
            return Err(Error::Config(format!(
                "sources: at least 2 sources are required, got {}",
                self.sources.len()
            )));
        }
        if self.mode == Mode::Joint && self.sources.len() != 2 {
            return Err(Error::Config(format!(
                "mode: joint training needs exactly 2 sources, got {}",
                self.sources.len()
            )));
        }
        for (j, s) in self.sources.iter().enumerate() {
            if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
                return Err(Error::Config(format!(
                    "sources[{j}].train_fraction: must lie strictly between 0 and 1, got {}",
                    s.train_fraction
                )));
            }
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate: must be positive".into()));
        }
        if !(self.duration_secs > 0.0 && self.duration_secs.is_finite()) {
            return Err(Error::Config(format!(
                "duration_secs: must be positive, got {}",
                self.duration_secs
            )));
        }
        if self.arch.h1 == 0 || self.arch.h2 == 0 {
            return Err(Error::Config("arch: hidden widths must be positive".into()));
        }
        if !(self.joint_gamma >= 0.0 && self.joint_gamma.is_finite()) {
            return Err(Error::Config(format!(
                "joint_gamma: must be non-negative, got {}",
                self.joint_gamma
            )));
        }
        self.train.validate().map_err(|e| cfg_err("train", e))?;
        self.hyper.validate().map_err(|e| cfg_err("hyper", e))?;
        Ok(())
    }
}
