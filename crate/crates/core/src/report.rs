//! On-disk report files.
//!
//! Layout of an analysis output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `songs/<id>.json` | one [`SongAnalysis`] per song |
//! | `report.json` | the full [`CorpusReport`] |
//! | `retrieval.csv` | [`RETRIEVAL_COLUMNS`]; one row per degree, then `mean` and `std` rows |
//! | `epsilon.csv` | [`EPSILON_COLUMNS`]; one row per analyzed song-track |
//! | `density_seperewa.csv`, `density_vocals.csv` | [`DENSITY_COLUMNS`]; one row per merged component |
//! | `comparison.csv` | [`COMPARISON_COLUMNS`]; one row per degree found in both tracks of some song |
//! | `errors.csv` | [`ERROR_COLUMNS`]; failed songs (`scope = song`) and failed tracks |
//!
//! Empty CSV fields mark values that do not apply (degrees no tuning contains).
//! Floats are written in their shortest round-trip form, so reading a file back
//! reproduces the in-memory values exactly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{CorpusReport, CorpusRun, SongAnalysis, Summary, TrackOutcome};
use crate::ingest::TrackRole;

pub const SONGS_DIR: &str = "songs";
pub const REPORT_JSON: &str = "report.json";
pub const RETRIEVAL_CSV: &str = "retrieval.csv";
pub const EPSILON_CSV: &str = "epsilon.csv";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const ERRORS_CSV: &str = "errors.csv";

pub const RETRIEVAL_COLUMNS: [&str; 10] = [
    "degree",
    "n_in_tuning",
    "seperewa_n_in_tuning",
    "seperewa_retrieved",
    "seperewa_missing",
    "seperewa_unexpected",
    "vocals_n_in_tuning",
    "vocals_retrieved",
    "vocals_missing",
    "vocals_unexpected",
];
pub const EPSILON_COLUMNS: [&str; 3] = ["track", "song_id", "epsilon_s"];
pub const DENSITY_COLUMNS: [&str; 5] = ["song_id", "position_cents", "weight", "degree", "offset_cents"];
pub const COMPARISON_COLUMNS: [&str; 4] = ["degree", "n_songs_matched", "mean_distance_cents", "std_distance_cents"];
pub const ERROR_COLUMNS: [&str; 3] = ["id", "scope", "error"];

pub fn density_csv_name(track: TrackRole) -> String {
    format!("density_{track}.csv")
}

/// Report files written by [`write_reports`], excluding per-song JSON.
pub fn report_file_names() -> Vec<String> {
    vec![
        RETRIEVAL_CSV.to_string(),
        EPSILON_CSV.to_string(),
        density_csv_name(TrackRole::Seperewa),
        density_csv_name(TrackRole::Vocals),
        COMPARISON_CSV.to_string(),
    ]
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn at(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_at(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |e| ReportError {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ReportError {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(at(path))
}

fn num<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), ReportError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_at(path))?;
    w.write_record(header).map_err(csv_at(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_at(path))?;
    }
    w.flush().map_err(at(path))
}

pub fn write_retrieval_csv(path: &Path, report: &CorpusReport) -> Result<(), ReportError> {
    let table = &report.retrieval;
    let mut rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.degree.to_string(), num(r.n_in_tuning)];
            for role in TrackRole::ALL {
                let c = r.tracks.get(role);
                row.extend([
                    num(c.n_in_tuning),
                    num(c.retrieved),
                    num(c.missing),
                    c.unexpected.to_string(),
                ]);
            }
            row
        })
        .collect();
    let s = &table.summary;
    for (label, pick) in [
        ("mean", (|s: Summary| s.mean) as fn(Summary) -> f64),
        ("std", |s: Summary| s.std),
    ] {
        let mut row = vec![label.to_string(), num(s.n_in_tuning.map(pick))];
        for role in TrackRole::ALL {
            let t = s.tracks.get(role);
            row.extend([
                String::new(),
                num(t.retrieved.map(pick)),
                num(t.missing.map(pick)),
                num(t.unexpected.map(pick)),
            ]);
        }
        rows.push(row);
    }
    write_csv(path, &RETRIEVAL_COLUMNS, rows)
}

pub fn write_epsilon_csv(path: &Path, report: &CorpusReport) -> Result<(), ReportError> {
    let rows = TrackRole::ALL.into_iter().flat_map(|role| {
        report
            .epsilon
            .get(role)
            .values
            .iter()
            .map(move |v| vec![role.to_string(), v.id.clone(), v.epsilon_s.to_string()])
    });
    write_csv(path, &EPSILON_COLUMNS, rows)
}

pub fn write_density_csv(path: &Path, report: &CorpusReport, track: TrackRole) -> Result<(), ReportError> {
    let rows = report.density.get(track).iter().map(|p| {
        vec![
            p.song_id.clone(),
            p.position_cents.to_string(),
            p.weight.to_string(),
            p.degree.to_string(),
            p.offset_cents.to_string(),
        ]
    });
    write_csv(path, &DENSITY_COLUMNS, rows)
}

pub fn write_comparison_csv(path: &Path, report: &CorpusReport) -> Result<(), ReportError> {
    let rows = report.comparison.iter().map(|r| {
        vec![
            r.degree.to_string(),
            r.n_songs_matched.to_string(),
            r.mean_distance_cents.to_string(),
            r.std_distance_cents.to_string(),
        ]
    });
    write_csv(path, &COMPARISON_COLUMNS, rows)
}

pub fn write_errors_csv(path: &Path, run: &CorpusRun) -> Result<(), ReportError> {
    let mut rows: Vec<Vec<String>> = run
        .failures
        .iter()
        .map(|f| vec![f.id.clone(), "song".into(), f.error.clone()])
        .collect();
    for a in &run.analyses {
        for role in TrackRole::ALL {
            if let TrackOutcome::Failed { reason } = a.track(role) {
                rows.push(vec![a.id.clone(), role.to_string(), reason.clone()]);
            }
        }
    }
    rows.sort();
    write_csv(path, &ERROR_COLUMNS, rows)
}

pub fn song_json_path(out_dir: &Path, song: &SongAnalysis) -> PathBuf {
    out_dir.join(SONGS_DIR).join(format!("{}.json", song.id))
}

/// Writes every per-song and corpus-level file into `out_dir`; returns the
/// paths written.
pub fn write_reports(out_dir: &Path, run: &CorpusRun, report: &CorpusReport) -> Result<Vec<PathBuf>, ReportError> {
    let songs = out_dir.join(SONGS_DIR);
    fs::create_dir_all(&songs).map_err(at(&songs))?;
    let mut written = Vec::new();
    for song in &run.analyses {
        let path = song_json_path(out_dir, song);
        write_json(&path, song)?;
        written.push(path);
    }

    let path = out_dir.join(REPORT_JSON);
    write_json(&path, report)?;
    written.push(path);

    let path = out_dir.join(RETRIEVAL_CSV);
    write_retrieval_csv(&path, report)?;
    written.push(path);

    let path = out_dir.join(EPSILON_CSV);
    write_epsilon_csv(&path, report)?;
    written.push(path);

    for role in TrackRole::ALL {
        let path = out_dir.join(density_csv_name(role));
        write_density_csv(&path, report, role)?;
        written.push(path);
    }

    let path = out_dir.join(COMPARISON_CSV);
    write_comparison_csv(&path, report)?;
    written.push(path);

    let path = out_dir.join(ERRORS_CSV);
    write_errors_csv(&path, run)?;
    written.push(path);
    Ok(written)
}
