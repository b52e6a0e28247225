use std::path::Path;
use std::process::{Command, Output};

fn dfsep(args: &[&str], extra: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfsep"))
        .args(args)
        .args(extra)
        .output()
        .unwrap()
}

const SMALL: &str = r#"
preset = "desk"
duration_secs = 1.5
exhaustive_mu = true

[train]
epochs = 4

[[sources]]
synth = { kind = "harmonic", f0 = 220.0, partials = 8 }

[[sources]]
synth = { kind = "bandnoise", low = 2400.0, high = 3600.0 }
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn synth_writes_identical_wavs_for_the_same_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = dfsep(&["synth", "--seed", "9", "--out"], &[d]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for j in 0..2 {
        let name = format!("source_{j}.wav");
        let wa = std::fs::read(a.join(&name)).unwrap();
        assert_eq!(wa, std::fs::read(b.join(&name)).unwrap());
        let r = hound::WavReader::open(a.join(&name)).unwrap();
        assert_eq!(r.spec().sample_rate, 8000);
        assert_eq!(r.duration(), 32000);
    }
    let c = tmp.path().join("c");
    dfsep(&["synth", "--seed", "10", "--out"], &[&c]);
    assert_ne!(std::fs::read(a.join("source_1.wav")).unwrap(), std::fs::read(c.join("source_1.wav")).unwrap());
}

#[test]
fn run_is_deterministic_and_trace_is_inspectable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = dfsep(&["run", "--config"], &[&cfg, Path::new("--out"), d]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["report.json", "scores.csv", "models/source_0.mnet", "models/source_1.mnet", "traces/source_0.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = dfsep(&["inspect-trace"], &[&a.join("traces/source_0.json")]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("gamma") && text.contains("mu"));
    let o = dfsep(&["inspect-trace"], &[&a.join("report.json")]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("source 1"));

    // scoring the references against themselves is perfect
    let o = dfsep(
        &["eval", "--estimate"],
        &[
            &a.join("references/source_0.wav"),
            Path::new("--estimate"),
            &a.join("references/source_1.wav"),
            Path::new("--reference"),
            &a.join("references/source_0.wav"),
            Path::new("--reference"),
            &a.join("references/source_1.wav"),
            Path::new("--out"),
            &tmp.path().join("eval"),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("eval/scores.csv")).unwrap();
    assert!(csv.starts_with("source_index,sdr_db,sir_db,sar_db\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("0,300.000000"));
}

#[test]
fn joint_mode_with_three_sources_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "mode = \"joint\"\n{SMALL}\n[[sources]]\nsynth = {{ kind = \"chirp\", f_start = 500.0, f_end = 900.0 }}\n"
    );
    let cfg = write_config(tmp.path(), &text);
    let o = dfsep(&["run", "--config"], &[&cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    for text in [
        "preset = \"desk\"\nunknown_key = 1\n",
        "this is not toml",
        "[[sources]]\nsynth = { kind = \"harmonic\", f0 = 220.0, partials = 4 }\n",
        &format!("{SMALL}\n[hyper]\nrs_min = -1.0\n"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = dfsep(&["run", "--config"], &[&cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = dfsep(&["run", "--config"], &[&tmp.path().join("missing.toml")]);
    assert_eq!(o.status.code(), Some(2));
    let o = dfsep(&["run", "--preset", "loud"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[[sources]]\nwav = \"nowhere_0.wav\"\n\n[[sources]]\nwav = \"nowhere_1.wav\"\n";
    let cfg = write_config(tmp.path(), text);
    let o = dfsep(&["run", "--config"], &[&cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
