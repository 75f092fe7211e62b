//! Seeded synthetic F0 traces and corpora.
//!
//! Every generated note is a stationary Gaussian in cents around a known
//! position, so the generating scale is available as ground truth when the
//! traces are pushed back through the pipeline.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ManifestEntry, MANIFEST_FILE};
use crate::ingest::{cents_to_hz, write_f0_csv, F0Frame, F0Trace, TrackRole};
use crate::scale::{expected_degrees, KnownTuning, Quality};

/// Frame spacing of generated traces.
pub const HOP_SECONDS: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("a top-level `seed` is required so runs are reproducible")]
    MissingSeed,
    #[error("invalid corpus spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> SynthError {
    SynthError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteSpec {
    pub position_cents: f64,
    pub std_cents: f64,
    pub weight: f64,
}

impl NoteSpec {
    pub fn new(position_cents: f64, std_cents: f64, weight: f64) -> Self {
        NoteSpec {
            position_cents,
            std_cents,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub notes: Vec<NoteSpec>,
    pub tonic_hz: f64,
    pub n_frames: usize,
    pub confidence_range: [f64; 2],
    pub unvoiced_fraction: f64,
    pub seed: u64,
}

impl ScaleSpec {
    /// Fully voiced, high-confidence spec.
    pub fn new(notes: Vec<NoteSpec>, tonic_hz: f64, n_frames: usize, seed: u64) -> Self {
        ScaleSpec {
            notes,
            tonic_hz,
            n_frames,
            confidence_range: [0.85, 1.0],
            unvoiced_fraction: 0.0,
            seed,
        }
    }

    /// Checks every field; errors name the offending field under `prefix`.
    pub fn validate(&self, prefix: &str) -> Result<(), SynthError> {
        let at = |name: &str| {
            if prefix.is_empty() {
                name.to_string()
            } else {
                format!("{prefix}.{name}")
            }
        };
        if self.notes.is_empty() {
            return Err(field_err(at("notes"), "at least one note is required"));
        }
        for (i, n) in self.notes.iter().enumerate() {
            let note = at(&format!("notes[{i}]"));
            if !(-200.0..=1200.0).contains(&n.position_cents) {
                return Err(field_err(
                    format!("{note}.position_cents"),
                    format!("{} is outside [-200, 1200]", n.position_cents),
                ));
            }
            if !(n.std_cents > 0.0) || !n.std_cents.is_finite() {
                return Err(field_err(
                    format!("{note}.std_cents"),
                    format!("must be positive, got {}", n.std_cents),
                ));
            }
            if !(n.weight > 0.0) || !n.weight.is_finite() {
                return Err(field_err(
                    format!("{note}.weight"),
                    format!("must be positive, got {}", n.weight),
                ));
            }
        }
        if !(self.tonic_hz > 0.0) || !self.tonic_hz.is_finite() {
            return Err(field_err(
                at("tonic_hz"),
                format!("must be positive, got {}", self.tonic_hz),
            ));
        }
        if self.n_frames == 0 {
            return Err(field_err(at("n_frames"), "must be positive"));
        }
        let [lo, hi] = self.confidence_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(field_err(
                at("confidence_range"),
                format!("[{lo}, {hi}] is not a sub-interval of [0, 1]"),
            ));
        }
        if !(0.0..=1.0).contains(&self.unvoiced_fraction) {
            return Err(field_err(
                at("unvoiced_fraction"),
                format!("{} is outside [0, 1]", self.unvoiced_fraction),
            ));
        }
        Ok(())
    }
}

/// Samples a trace from `spec`. Timestamps advance by [`HOP_SECONDS`].
pub fn generate_trace(spec: &ScaleSpec, role: TrackRole) -> Result<F0Trace, SynthError> {
    spec.validate("")?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picker = WeightedIndex::new(spec.notes.iter().map(|n| n.weight)).expect("validated weights");
    let notes: Vec<Normal<f64>> = spec
        .notes
        .iter()
        .map(|n| Normal::new(n.position_cents, n.std_cents).expect("validated std"))
        .collect();
    let [lo, hi] = spec.confidence_range;
    let confidence = Uniform::new_inclusive(lo, hi).expect("validated range");

    let frames = (0..spec.n_frames)
        .map(|i| {
            let time_s = i as f64 * HOP_SECONDS;
            if rng.random::<f64>() < spec.unvoiced_fraction {
                F0Frame {
                    time_s,
                    frequency_hz: 0.0,
                    confidence: rng.random_range(0.0..0.5),
                }
            } else {
                let cents = notes[picker.sample(&mut rng)].sample(&mut rng);
                F0Frame {
                    time_s,
                    frequency_hz: cents_to_hz(cents, spec.tonic_hz),
                    confidence: confidence.sample(&mut rng),
                }
            }
        })
        .collect();
    Ok(F0Trace {
        frames,
        source_label: role,
    })
}

/// Equal-tempered positions of a tuning's expected degrees.
pub fn expected_positions(tuning: &KnownTuning) -> Vec<f64> {
    expected_degrees(tuning)
        .into_iter()
        .map(|d| d.canonical_cents())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongSpec {
    pub id: String,
    pub tuning: KnownTuning,
    pub seperewa: ScaleSpec,
    pub vocals: ScaleSpec,
}

impl SongSpec {
    pub fn track(&self, role: TrackRole) -> &ScaleSpec {
        match role {
            TrackRole::Seperewa => &self.seperewa,
            TrackRole::Vocals => &self.vocals,
        }
    }
}

/// Writes `<id>_seperewa.csv`, `<id>_vocals.csv` per song and a manifest
/// into `out_dir`; returns the manifest path. Manifest paths are relative to
/// `out_dir`.
pub fn generate_corpus(songs: &[SongSpec], out_dir: &Path) -> Result<PathBuf, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    for (i, song) in songs.iter().enumerate() {
        crate::corpus::validate_id(&song.id).map_err(|m| field_err(format!("songs[{i}].id"), m))?;
        for role in TrackRole::ALL {
            song.track(role).validate(&format!("songs[{i}].{role}"))?;
        }
    }
    if songs.is_empty() {
        log::warn!("no songs to generate; writing an empty manifest");
    }
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;

    let mut manifest = Vec::with_capacity(songs.len());
    for song in songs {
        let mut names = [String::new(), String::new()];
        for (slot, role) in names.iter_mut().zip(TrackRole::ALL) {
            let name = format!("{}_{}.csv", song.id, role);
            let path = out_dir.join(&name);
            let trace = generate_trace(song.track(role), role)?;
            let file = fs::File::create(&path).map_err(io(&path))?;
            write_f0_csv(&trace, BufWriter::new(file)).map_err(io(&path))?;
            *slot = name;
        }
        let [seperewa_f0, vocals_f0] = names;
        manifest.push(ManifestEntry {
            id: song.id.clone(),
            seperewa_f0,
            vocals_f0,
            tonic_hz: song.tuning.tonic_hz,
            third: song.tuning.third,
            sixth: song.tuning.sixth,
        });
    }
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(io(&path))?;
    Ok(path)
}

/// Per-track part of a corpus spec file; the seed is derived from the file's
/// top-level seed unless given.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpecFile {
    pub notes: Vec<NoteSpec>,
    pub n_frames: usize,
    #[serde(default = "default_confidence_range")]
    pub confidence_range: [f64; 2],
    #[serde(default)]
    pub unvoiced_fraction: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_confidence_range() -> [f64; 2] {
    [0.85, 1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SongSpecFile {
    pub id: String,
    pub tonic_hz: f64,
    pub third: Quality,
    pub sixth: Quality,
    pub seperewa: TrackSpecFile,
    pub vocals: TrackSpecFile,
}

/// JSON accepted by the `synth` command.
///
/// ```json
/// {"seed": 7, "songs": [{"id": "s01", "tonic_hz": 220.0, "third": "major", "sixth": "major",
///   "seperewa": {"notes": [{"position_cents": 0, "std_cents": 12, "weight": 1}], "n_frames": 4000},
///   "vocals":   {"notes": [{"position_cents": 0, "std_cents": 25, "weight": 1}], "n_frames": 4000}}]}
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpecFile {
    #[serde(default)]
    pub seed: Option<u64>,
    pub songs: Vec<SongSpecFile>,
}

impl CorpusSpecFile {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Resolves seeds and validates every field.
    pub fn into_songs(self) -> Result<Vec<SongSpec>, SynthError> {
        let seed = self.seed.ok_or(SynthError::MissingSeed)?;
        let mut out = Vec::with_capacity(self.songs.len());
        for (i, song) in self.songs.into_iter().enumerate() {
            if !(song.tonic_hz > 0.0) {
                return Err(field_err(
                    format!("songs[{i}].tonic_hz"),
                    format!("must be positive, got {}", song.tonic_hz),
                ));
            }
            let tuning = KnownTuning::new(song.tonic_hz, song.third, song.sixth);
            let track = |t: TrackSpecFile, role: usize| ScaleSpec {
                notes: t.notes,
                tonic_hz: song.tonic_hz,
                n_frames: t.n_frames,
                confidence_range: t.confidence_range,
                unvoiced_fraction: t.unvoiced_fraction,
                seed: t.seed.unwrap_or_else(|| derive_seed(seed, 2 * i as u64 + role as u64)),
            };
            let spec = SongSpec {
                id: song.id,
                tuning,
                seperewa: track(song.seperewa, 0),
                vocals: track(song.vocals, 1),
            };
            for role in TrackRole::ALL {
                spec.track(role).validate(&format!("songs[{i}].{role}"))?;
            }
            out.push(spec);
        }
        Ok(out)
    }
}

/// SplitMix64 step: decorrelated child seeds from one master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
