//! Corpus-level analysis.
//!
//! Each song pairs an instrument trace with a vocal trace and an annotated
//! tuning. Songs are analyzed independently (in parallel) and then folded, in
//! song-id order, into the retrieval table, the per-track ε_S distributions,
//! the component position densities and the paired track comparison.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    build_histogram, filter_confidence, parse_f0_csv, to_samples, F0Trace, IngestError, SampleConfig, TrackRole,
    DEFAULT_CONFIDENCE_THRESHOLD,
};
use crate::scale::{
    estimate_scale, expected_degrees, DegreeClass, KnownTuning, Quality, ScaleConfig, ScaleError, ScaleEstimate,
};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Human-readable definition of the deviation score, carried into reports.
pub const EPSILON_DEFINITION: &str = "mean absolute distance (cents) of merged component means \
     to the nearest tonic-anchored 100-cent gridline, unweighted over components; 0 = equal-tempered, 50 = maximal deviation";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("song `{id}`: {message}")]
    Song { id: String, message: String },
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum TrackError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

/// One manifest row as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub seperewa_f0: String,
    pub vocals_f0: String,
    pub tonic_hz: f64,
    pub third: Quality,
    pub sixth: Quality,
}

/// Song ids become file names, so they are restricted to a portable alphabet.
pub fn validate_id(id: &str) -> Result<(), String> {
    if id.is_empty() {
        return Err("id must not be empty".into());
    }
    if let Some(bad) = id
        .chars()
        .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-')))
    {
        return Err(format!(
            "id `{id}` contains `{bad}`; only ASCII letters, digits, '.', '_' and '-' are allowed"
        ));
    }
    if id.starts_with('.') {
        return Err(format!("id `{id}` must not start with '.'"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongRecord {
    pub id: String,
    pub seperewa_trace_path: PathBuf,
    pub vocals_trace_path: PathBuf,
    pub tuning: KnownTuning,
}

impl SongRecord {
    pub fn trace_path(&self, role: TrackRole) -> &Path {
        match role {
            TrackRole::Seperewa => &self.seperewa_trace_path,
            TrackRole::Vocals => &self.vocals_trace_path,
        }
    }
}

/// Parses manifest JSON. Relative trace paths are resolved against `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path, origin: &Path) -> Result<Vec<SongRecord>, CorpusError> {
    let err = |message: String| CorpusError::Manifest {
        path: origin.to_path_buf(),
        message,
    };
    let entries: Vec<ManifestEntry> = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(entries.len());
    for (i, e) in entries.into_iter().enumerate() {
        validate_id(&e.id).map_err(|m| err(format!("entry {i}: {m}")))?;
        if !seen.insert(e.id.clone()) {
            return Err(err(format!("entry {i}: duplicate id `{}`", e.id)));
        }
        if !(e.tonic_hz > 0.0) || !e.tonic_hz.is_finite() {
            return Err(err(format!(
                "entry {i} (`{}`): tonic_hz must be positive, got {}",
                e.id, e.tonic_hz
            )));
        }
        records.push(SongRecord {
            seperewa_trace_path: base_dir.join(&e.seperewa_f0),
            vocals_trace_path: base_dir.join(&e.vocals_f0),
            tuning: KnownTuning::new(e.tonic_hz, e.third, e.sixth),
            id: e.id,
        });
    }
    Ok(records)
}

pub fn load_manifest(path: &Path) -> Result<Vec<SongRecord>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(&text, base, path)
}

/// Every knob of the per-track pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub confidence_threshold: f64,
    pub sample: SampleConfig,
    pub scale: ScaleConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            sample: SampleConfig::default(),
            scale: ScaleConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(CorpusError::Config(format!(
                "confidence threshold {} outside [0, 1]",
                self.confidence_threshold
            )));
        }
        self.sample.validate().map_err(|e| CorpusError::Config(e.to_string()))?;
        self.scale
            .fit
            .validate()
            .map_err(|e| CorpusError::Config(e.to_string()))?;
        if !(self.scale.merge_radius_cents >= 0.0) || !self.scale.merge_radius_cents.is_finite() {
            return Err(CorpusError::Config(format!(
                "merge radius must be non-negative, got {}",
                self.scale.merge_radius_cents
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackResult {
    pub frames_total: usize,
    pub frames_retained: usize,
    pub estimate: ScaleEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrackOutcome {
    Analyzed(TrackResult),
    Failed { reason: String },
}

impl TrackOutcome {
    pub fn estimate(&self) -> Option<&ScaleEstimate> {
        match self {
            TrackOutcome::Analyzed(r) => Some(&r.estimate),
            TrackOutcome::Failed { .. } => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, TrackOutcome::Failed { .. })
    }
}

/// Filter, convert, histogram and estimate one trace.
pub fn analyze_trace(
    trace: &F0Trace,
    tuning: &KnownTuning,
    config: &PipelineConfig,
) -> Result<TrackResult, TrackError> {
    let kept = filter_confidence(trace, config.confidence_threshold);
    let samples = to_samples(&kept, tuning.tonic_hz, &config.sample)?;
    let hist = build_histogram(&samples)?;
    let estimate = estimate_scale(&hist, tuning, &config.scale)?;
    Ok(TrackResult {
        frames_total: trace.len(),
        frames_retained: samples.values.len(),
        estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongAnalysis {
    pub id: String,
    pub tuning: KnownTuning,
    pub expected: BTreeSet<DegreeClass>,
    pub seperewa: TrackOutcome,
    pub vocals: TrackOutcome,
}

impl SongAnalysis {
    pub fn track(&self, role: TrackRole) -> &TrackOutcome {
        match role {
            TrackRole::Seperewa => &self.seperewa,
            TrackRole::Vocals => &self.vocals,
        }
    }

    pub fn estimate(&self, role: TrackRole) -> Option<&ScaleEstimate> {
        self.track(role).estimate()
    }
}

/// Analyzes both traces of a song; a track that cannot be analyzed is marked
/// failed without affecting the other.
pub fn analyze_traces(
    id: &str,
    tuning: &KnownTuning,
    seperewa: &F0Trace,
    vocals: &F0Trace,
    config: &PipelineConfig,
) -> SongAnalysis {
    let outcome = |trace: &F0Trace| match analyze_trace(trace, tuning, config) {
        Ok(r) => TrackOutcome::Analyzed(r),
        Err(e) => TrackOutcome::Failed { reason: e.to_string() },
    };
    SongAnalysis {
        id: id.to_string(),
        tuning: *tuning,
        expected: expected_degrees(tuning),
        seperewa: outcome(seperewa),
        vocals: outcome(vocals),
    }
}

pub fn read_trace(path: &Path, role: TrackRole) -> Result<F0Trace, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_f0_csv(&bytes, role).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads and analyzes one song. Unreadable or malformed trace files fail the
/// whole song.
pub fn analyze_song(record: &SongRecord, config: &PipelineConfig) -> Result<SongAnalysis, CorpusError> {
    let load = |role| {
        read_trace(record.trace_path(role), role).map_err(|message| CorpusError::Song {
            id: record.id.clone(),
            message,
        })
    };
    let seperewa = load(TrackRole::Seperewa)?;
    let vocals = load(TrackRole::Vocals)?;
    Ok(analyze_traces(&record.id, &record.tuning, &seperewa, &vocals, config))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusRun {
    /// Sorted by song id.
    pub analyses: Vec<SongAnalysis>,
    /// Sorted by song id.
    pub failures: Vec<SongFailure>,
}

/// Analyzes every song on a pool of `workers` threads (0 = rayon default).
/// Results are sorted by id, so scheduling never changes the output.
pub fn analyze_corpus(
    records: &[SongRecord],
    config: &PipelineConfig,
    workers: usize,
) -> Result<CorpusRun, CorpusError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CorpusError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<SongAnalysis, CorpusError>> =
        pool.install(|| records.par_iter().map(|r| analyze_song(r, config)).collect());

    let mut run = CorpusRun::default();
    for (record, result) in records.iter().zip(results) {
        match result {
            Ok(a) => run.analyses.push(a),
            Err(e) => run.failures.push(SongFailure {
                id: record.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    run.analyses.sort_by(|a, b| a.id.cmp(&b.id));
    run.failures.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(run)
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and population (divide-by-N) standard deviation; `None` when empty.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some(Summary {
        n: values.len(),
        mean,
        std: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerTrack<T> {
    pub seperewa: T,
    pub vocals: T,
}

impl<T> PerTrack<T> {
    pub fn get(&self, role: TrackRole) -> &T {
        match role {
            TrackRole::Seperewa => &self.seperewa,
            TrackRole::Vocals => &self.vocals,
        }
    }

    pub fn get_mut(&mut self, role: TrackRole) -> &mut T {
        match role {
            TrackRole::Seperewa => &mut self.seperewa,
            TrackRole::Vocals => &mut self.vocals,
        }
    }

    pub fn from_fn(mut f: impl FnMut(TrackRole) -> T) -> Self {
        PerTrack {
            seperewa: f(TrackRole::Seperewa),
            vocals: f(TrackRole::Vocals),
        }
    }
}

/// Retrieval counts of one degree for one track.
///
/// `n_in_tuning` counts only songs whose track was analyzed, so
/// `retrieved + missing == n_in_tuning` holds even when tracks failed.
/// The three expected-degree fields are `None` for degrees that no tuning in
/// the corpus contains.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackCounts {
    pub n_in_tuning: Option<usize>,
    pub retrieved: Option<usize>,
    pub missing: Option<usize>,
    pub unexpected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRow {
    pub degree: DegreeClass,
    /// Songs whose tuning contains the degree; `None` when no tuning does.
    pub n_in_tuning: Option<usize>,
    pub tracks: PerTrack<TrackCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackSummary {
    pub retrieved: Option<Summary>,
    pub missing: Option<Summary>,
    pub unexpected: Option<Summary>,
}

/// Column summaries, each over exactly the rows that carry a number in that column.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalSummary {
    pub n_in_tuning: Option<Summary>,
    pub tracks: PerTrack<TrackSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTable {
    pub rows: Vec<RetrievalRow>,
    pub summary: RetrievalSummary,
    pub songs: usize,
    /// Songs whose track failed and was left out of that track's counts.
    pub excluded_tracks: PerTrack<usize>,
}

/// Per-degree retrieved / missing / unexpected counts across songs.
pub fn aggregate_retrieval(analyses: &[SongAnalysis]) -> RetrievalTable {
    let mut rows: Vec<RetrievalRow> = DegreeClass::ALL
        .iter()
        .map(|&degree| RetrievalRow {
            degree,
            n_in_tuning: None,
            tracks: PerTrack::default(),
        })
        .collect();
    let mut in_tuning = [0usize; 12];
    let mut excluded = PerTrack::<usize>::default();

    for song in analyses {
        for d in &song.expected {
            in_tuning[d.semitones()] += 1;
        }
        for role in TrackRole::ALL {
            let Some(est) = song.estimate(role) else {
                *excluded.get_mut(role) += 1;
                continue;
            };
            for d in &song.expected {
                let c = rows[d.semitones()].tracks.get_mut(role);
                *c.n_in_tuning.get_or_insert(0) += 1;
            }
            for d in &est.retrieval.retrieved {
                *rows[d.semitones()].tracks.get_mut(role).retrieved.get_or_insert(0) += 1;
            }
            for d in &est.retrieval.missing {
                *rows[d.semitones()].tracks.get_mut(role).missing.get_or_insert(0) += 1;
            }
            for d in &est.retrieval.unexpected {
                rows[d.semitones()].tracks.get_mut(role).unexpected += 1;
            }
        }
    }

    for (row, &n) in rows.iter_mut().zip(&in_tuning) {
        if n == 0 {
            continue;
        }
        row.n_in_tuning = Some(n);
        for role in TrackRole::ALL {
            let c = row.tracks.get_mut(role);
            let analyzed = c.n_in_tuning.unwrap_or(0);
            c.n_in_tuning = Some(analyzed);
            c.retrieved = Some(c.retrieved.unwrap_or(0));
            c.missing = Some(analyzed - c.retrieved.unwrap_or(0));
        }
    }

    let column = |f: &dyn Fn(&RetrievalRow) -> Option<usize>| {
        let values: Vec<f64> = rows.iter().filter_map(f).map(|v| v as f64).collect();
        summarize(&values)
    };
    let summary = RetrievalSummary {
        n_in_tuning: column(&|r| r.n_in_tuning),
        tracks: PerTrack::from_fn(|role| TrackSummary {
            retrieved: column(&|r| r.tracks.get(role).retrieved),
            missing: column(&|r| r.tracks.get(role).missing),
            unexpected: column(&|r| Some(r.tracks.get(role).unexpected)),
        }),
    };
    RetrievalTable {
        rows,
        summary,
        songs: analyses.len(),
        excluded_tracks: excluded,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongEpsilon {
    pub id: String,
    pub epsilon_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDistribution {
    pub track: TrackRole,
    pub values: Vec<SongEpsilon>,
    pub summary: Option<Summary>,
}

pub fn epsilon_distribution(analyses: &[SongAnalysis], track: TrackRole) -> EpsilonDistribution {
    let values: Vec<SongEpsilon> = analyses
        .iter()
        .filter_map(|a| {
            a.estimate(track).map(|e| SongEpsilon {
                id: a.id.clone(),
                epsilon_s: e.epsilon_s,
            })
        })
        .collect();
    let raw: Vec<f64> = values.iter().map(|v| v.epsilon_s).collect();
    EpsilonDistribution {
        track,
        summary: summarize(&raw),
        values,
    }
}

/// One merged component, for density plots against the 100-cent grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub song_id: String,
    /// Tonic-relative, not octave-folded.
    pub position_cents: f64,
    pub weight: f64,
    pub degree: DegreeClass,
    pub offset_cents: f64,
}

pub fn degree_density(analyses: &[SongAnalysis], track: TrackRole) -> Vec<DensityPoint> {
    let points: Vec<DensityPoint> = analyses
        .iter()
        .filter_map(|a| a.estimate(track).map(|e| (a, e)))
        .flat_map(|(a, e)| {
            e.components.iter().zip(&e.labels).map(move |(c, l)| DensityPoint {
                song_id: a.id.clone(),
                position_cents: c.mean_cents,
                weight: c.weight,
                degree: l.degree,
                offset_cents: l.offset_cents,
            })
        })
        .collect();
    if points.is_empty() {
        log::warn!("no analyzed {track} tracks; degree density is empty");
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub degree: DegreeClass,
    pub n_songs_matched: usize,
    /// Vocals minus instrument; negative means the voice is flatter.
    pub mean_distance_cents: f64,
    pub std_distance_cents: f64,
}

/// Signed vocal-minus-instrument distance for every degree both tracks of a
/// song carry. With several components on one degree the heaviest is used.
/// Distances are taken between the degree offsets, which equals the plain
/// difference when both components lie in the same octave.
pub fn song_distances(song: &SongAnalysis) -> Vec<(DegreeClass, f64)> {
    let (Some(inst), Some(voc)) = (song.estimate(TrackRole::Seperewa), song.estimate(TrackRole::Vocals)) else {
        return Vec::new();
    };
    DegreeClass::ALL
        .iter()
        .filter_map(|&d| {
            let (_, li) = inst.strongest(d)?;
            let (_, lv) = voc.strongest(d)?;
            Some((d, lv.offset_cents - li.offset_cents))
        })
        .collect()
}

pub fn compare_tracks(analyses: &[SongAnalysis]) -> Vec<ComparisonRow> {
    let mut per_degree: Vec<Vec<f64>> = vec![Vec::new(); 12];
    for song in analyses {
        for (d, dist) in song_distances(song) {
            per_degree[d.semitones()].push(dist);
        }
    }
    DegreeClass::ALL
        .iter()
        .zip(&per_degree)
        .filter_map(|(&degree, dists)| {
            summarize(dists).map(|s| ComparisonRow {
                degree,
                n_songs_matched: s.n,
                mean_distance_cents: s.mean,
                std_distance_cents: s.std,
            })
        })
        .collect()
}

/// Everything a corpus run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub songs_analyzed: usize,
    pub song_failures: Vec<SongFailure>,
    pub epsilon_definition: String,
    pub retrieval: RetrievalTable,
    pub epsilon: PerTrack<EpsilonDistribution>,
    pub density: PerTrack<Vec<DensityPoint>>,
    pub comparison: Vec<ComparisonRow>,
}

pub fn build_report(run: &CorpusRun) -> CorpusReport {
    let analyses = &run.analyses;
    CorpusReport {
        songs_analyzed: analyses.len(),
        song_failures: run.failures.clone(),
        epsilon_definition: EPSILON_DEFINITION.to_string(),
        retrieval: aggregate_retrieval(analyses),
        epsilon: PerTrack::from_fn(|role| epsilon_distribution(analyses, role)),
        density: PerTrack::from_fn(|role| degree_density(analyses, role)),
        comparison: compare_tracks(analyses),
    }
}
