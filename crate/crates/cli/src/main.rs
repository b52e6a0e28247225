use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfsep::experiment::{
    compare_to_dir, eval_files, format_run_summary, format_trace, run_to_dir, synth_to_dir, ConfigOverrides,
    ExperimentConfig, ExperimentReport, Preset, SourceInput,
};
use dfsep::metrics::{format_score_csv, format_score_summary};
use dfsep::tune::TuneTrace;
use dfsep::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "dfsep", version, about = "Single-channel source separation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one WAV per configured source.
    Synth(Common),
    /// Train, separate and score in the configured mode.
    Run(Common),
    /// Run both modes on the same data and seeds and tabulate the averages.
    Compare(Common),
    /// Score estimate WAVs against reference WAVs (index-aligned).
    Eval(EvalArgs),
    /// Pretty-print a tuning trace, or every trace in a run report.
    InspectTrace {
        path: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment TOML. Without it the two-source synthetic fixture is used.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "estimate", value_name = "WAV", required = true)]
    estimates: Vec<PathBuf>,
    #[arg(long = "reference", value_name = "WAV", required = true)]
    references: Vec<PathBuf>,
    /// Also write scores.csv and summary.txt here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    TimitLike,
    TspLike,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::TimitLike => Preset::TimitLike,
            PresetArg::TspLike => Preset::TspLike,
        }
    }
}

impl Common {
    fn load(&self) -> dfsep::Result<ExperimentConfig> {
        let overrides = ConfigOverrides {
            seed: self.seed,
            out: self.out.clone(),
            preset: self.preset.map(Into::into),
        };
        match &self.config {
            Some(p) => ExperimentConfig::load(p, &overrides),
            None => {
                let preset = overrides.preset.unwrap_or_default();
                let mut cfg = ExperimentConfig::from_preset(preset, dfsep::experiment::disjoint_band_fixture());
                if let Some(s) = overrides.seed {
                    cfg.base_seed = s;
                }
                if let Some(o) = overrides.out {
                    cfg.output_dir = o;
                }
                Ok(cfg)
            }
        }
    }
}

fn write(path: &Path, text: &str) -> dfsep::Result<()> {
    std::fs::write(path, text).map_err(Error::from)
}

fn synth(args: &Common) -> dfsep::Result<()> {
    let mut cfg = args.load()?;
    // --seed reseeds every synthetic source: source j gets seed + j
    if let Some(seed) = args.seed {
        for (j, s) in cfg.sources.iter_mut().enumerate() {
            if let SourceInput::Synth { seed: s, .. } = &mut s.input {
                *s = seed.wrapping_add(j as u64);
            }
        }
    }
    for p in synth_to_dir(&cfg, &cfg.output_dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn run(args: &Common) -> dfsep::Result<()> {
    let cfg = args.load()?;
    let outcome = run_to_dir(&cfg)?;
    print!("{}", format_run_summary(&outcome.report, &outcome.evaluation));
    println!("\nwrote {}", cfg.output_dir.display());
    Ok(())
}

fn compare(args: &Common) -> dfsep::Result<()> {
    let cfg = args.load()?;
    let report = compare_to_dir(&cfg)?;
    print!("{}", report.to_text());
    println!("\nwrote {}", cfg.output_dir.display());
    Ok(())
}

fn eval(args: &EvalArgs) -> dfsep::Result<()> {
    let ev = eval_files(&args.estimates, &args.references)?;
    print!("{}", format_score_summary(&ev));
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        write(&dir.join("scores.csv"), &format_score_csv(&ev))?;
        write(&dir.join("summary.txt"), &format_score_summary(&ev))?;
    }
    Ok(())
}

fn inspect(path: &Path) -> dfsep::Result<()> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(t) = serde_json::from_str::<TuneTrace>(&text) {
        print!("{}", format_trace(&t));
        return Ok(());
    }
    let report: ExperimentReport = serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "trace",
        msg: format!("{}: neither a trace nor a run report ({e})", path.display()),
    })?;
    if report.traces.is_empty() {
        println!("report has no tuning traces (mode {})", report.mode.as_str());
    }
    for (j, t) in report.traces.iter().enumerate() {
        println!("== source {j} ==");
        print!("{}", format_trace(t));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Eval(a) => eval(a),
        Command::InspectTrace { path } => inspect(path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
