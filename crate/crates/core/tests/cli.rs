mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pitchscale::corpus::{SongAnalysis, TrackOutcome};
use pitchscale::report::{report_file_names, ERRORS_CSV, REPORT_JSON, SONGS_DIR};
use pitchscale::synth::generate_corpus;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pitchscale"));
    c.env_remove(pitchscale::cli::WORKERS_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pitchscale")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(dir: &Path, n: usize) -> PathBuf {
    generate_corpus(&common::round_trip_corpus(n, 99), dir).unwrap()
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.insert(rel, fs::read(&entry).unwrap());
    }
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files.sort();
    files
}

#[test]
fn analyze_writes_full_inventory() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(&tmp.path().join("in"), 5);
    let out = tmp.path().join("out");
    let o = run(&["analyze", s(&manifest), s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let songs: Vec<_> = walk(&out.join(SONGS_DIR));
    assert_eq!(songs.len(), 5);
    for name in report_file_names() {
        assert!(out.join(&name).is_file(), "missing {name}");
    }
    assert!(out.join(REPORT_JSON).is_file());
    assert!(out.join(ERRORS_CSV).is_file());
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["tool"], "pitchscale");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["songs_analyzed"], 5);
    assert!(meta["non_default"].as_array().unwrap().is_empty());
}

#[test]
fn analyze_is_byte_identical_across_runs_and_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(&tmp.path().join("in"), 6);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        run(&["analyze", s(&manifest), s(&a), "--seed", "5"]).status.code(),
        Some(0)
    );
    let o = bin()
        .args(["analyze", s(&manifest), s(&b), "--seed", "5"])
        .env(pitchscale::cli::WORKERS_ENV, "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));
}

#[test]
fn non_default_flags_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(&tmp.path().join("in"), 2);
    let out = tmp.path().join("out");
    let o = run(&["analyze", s(&manifest), s(&out), "--merge-radius", "40", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    let flags: Vec<&str> = meta["non_default"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["flag"].as_str().unwrap())
        .collect();
    assert_eq!(flags, ["--merge-radius", "--seed"]);
    assert_eq!(meta["config"]["scale"]["merge_radius_cents"], 40.0);
}

#[test]
fn missing_trace_is_logged_and_others_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("in");
    let manifest = corpus(&dir, 3);
    fs::remove_file(dir.join("song01_vocals.csv")).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["analyze", s(&manifest), s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(walk(&out.join(SONGS_DIR)).len(), 2);
    let errors = fs::read_to_string(out.join(ERRORS_CSV)).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines.len(), 2, "{errors}");
    assert!(lines[1].starts_with("song01,song,"), "{errors}");
}

#[test]
fn all_songs_failing_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("in");
    let manifest = corpus(&dir, 2);
    for f in ["song00_seperewa.csv", "song01_seperewa.csv"] {
        fs::remove_file(dir.join(f)).unwrap();
    }
    let o = run(&["analyze", s(&manifest), s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bad_manifest_exits_3_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("manifest.json");
    fs::write(&manifest, r#"[{"id": "a", "seperewa_f0": "x.csv"}]"#).unwrap();
    let o = run(&["analyze", s(&manifest), s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("manifest.json"), "{err}");
}

#[test]
fn invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(&tmp.path().join("in"), 1);
    let out = tmp.path().join("out");
    let o = run(&["analyze", s(&manifest), s(&out), "--k-min", "5", "--k-max", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", s(&manifest), s(&out), "--bin-cents", "ten"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn song_prints_analysis_json() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("in");
    corpus(&dir, 1);
    let spec = &common::round_trip_corpus(1, 99)[0];
    let tonic = spec.tuning.tonic_hz.to_string();
    let o = run(&[
        "song",
        s(&dir.join("song00_seperewa.csv")),
        s(&dir.join("song00_vocals.csv")),
        "--tonic-hz",
        &tonic,
        "--third",
        &spec.tuning.third.to_string(),
        "--sixth",
        &spec.tuning.sixth.to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a: SongAnalysis = serde_json::from_slice(&o.stdout).unwrap();
    assert!(matches!(a.seperewa, TrackOutcome::Analyzed(_)));
    assert!(matches!(a.vocals, TrackOutcome::Analyzed(_)));
    assert_eq!(a.expected.len(), 6);
}

#[test]
fn song_argument_and_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("in");
    corpus(&dir, 1);
    let sep = dir.join("song00_seperewa.csv");
    let voc = dir.join("song00_vocals.csv");
    let base = |tonic: &str, third: &str| {
        run(&[
            "song",
            s(&sep),
            s(&voc),
            "--tonic-hz",
            tonic,
            "--third",
            third,
            "--sixth",
            "major",
        ])
    };
    assert_eq!(base("0", "major").status.code(), Some(2));
    assert_eq!(base("-220", "major").status.code(), Some(2));
    assert_eq!(base("220", "neutral").status.code(), Some(2));

    let garbage = tmp.path().join("bad.csv");
    fs::write(&garbage, "time,frequency,confidence\n0.0,abc,0.9\n").unwrap();
    let o = run(&[
        "song",
        s(&garbage),
        s(&voc),
        "--tonic-hz",
        "220",
        "--third",
        "major",
        "--sixth",
        "major",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

const SPEC: &str = r#"{
  "seed": 11,
  "songs": [
    {"id": "a", "tonic_hz": 220.0, "third": "major", "sixth": "major",
     "seperewa": {"notes": [{"position_cents": 0, "std_cents": 12, "weight": 1}, {"position_cents": 700, "std_cents": 12, "weight": 1}], "n_frames": 500},
     "vocals": {"notes": [{"position_cents": 400, "std_cents": 20, "weight": 1}], "n_frames": 500}},
    {"id": "b", "tonic_hz": 196.0, "third": "minor", "sixth": "minor",
     "seperewa": {"notes": [{"position_cents": 300, "std_cents": 12, "weight": 1}], "n_frames": 500},
     "vocals": {"notes": [{"position_cents": 800, "std_cents": 20, "weight": 1}], "n_frames": 500}},
    {"id": "c", "tonic_hz": 233.08, "third": "major", "sixth": "minor",
     "seperewa": {"notes": [{"position_cents": 500, "std_cents": 12, "weight": 1}], "n_frames": 500},
     "vocals": {"notes": [{"position_cents": 0, "std_cents": 20, "weight": 1}], "n_frames": 500, "unvoiced_fraction": 0.2}}
  ]
}"#;

#[test]
fn synth_writes_manifest_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, SPEC).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = run(&["synth", s(&spec), s(&a)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), s(&a.join("manifest.json")));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 3);
    assert_eq!(run(&["synth", s(&spec), s(&b)]).status.code(), Some(0));
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));
}

#[test]
fn synth_field_errors_and_missing_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    let out = tmp.path().join("out");

    fs::write(&spec, SPEC.replacen("\"std_cents\": 20", "\"std_cents\": -4", 1)).unwrap();
    let o = run(&["synth", s(&spec), s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("songs[0].vocals.notes[0].std_cents"), "{err}");

    fs::write(&spec, SPEC.replacen("\"seed\": 11,", "", 1)).unwrap();
    let o = run(&["synth", s(&spec), s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    assert!(!out.exists());
}
