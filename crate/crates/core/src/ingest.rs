//! F0 trace ingestion.
//!
//! Reads pitch-tracker output (`time,frequency,confidence` CSV), drops
//! low-confidence and unvoiced frames, converts the rest to cents relative to
//! the tonic, quantizes them onto a fixed bin grid and restricts them to the
//! analysis window. The result is a [`PitchHistogram`] ready for mixture fitting.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Expected CSV header, in order.
pub const F0_CSV_HEADER: [&str; 3] = ["time", "frequency", "confidence"];

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.8;
pub const DEFAULT_BIN_CENTS: f64 = 10.0;
/// A whole step below the tonic.
pub const DEFAULT_LO_CENTS: f64 = -200.0;
/// An octave above the tonic.
pub const DEFAULT_HI_CENTS: f64 = 1200.0;
/// Tracks with fewer retained frames are rejected.
pub const DEFAULT_MIN_SAMPLES: usize = 50;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{what} must be positive, got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("{track} track: {retained} usable samples, at least {required} required")]
    InsufficientData {
        track: TrackRole,
        retained: usize,
        required: usize,
    },
    #[error("invalid sampling configuration: {0}")]
    Config(String),
}

/// Which isolated stem a trace was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackRole {
    Seperewa,
    Vocals,
}

impl TrackRole {
    pub const ALL: [TrackRole; 2] = [TrackRole::Seperewa, TrackRole::Vocals];

    pub fn as_str(self) -> &'static str {
        match self {
            TrackRole::Seperewa => "seperewa",
            TrackRole::Vocals => "vocals",
        }
    }
}

impl fmt::Display for TrackRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Frame {
    pub time_s: f64,
    /// Non-positive values mark unvoiced frames.
    pub frequency_hz: f64,
    pub confidence: f64,
}

impl F0Frame {
    pub fn is_voiced(&self) -> bool {
        self.frequency_hz > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Trace {
    pub frames: Vec<F0Frame>,
    pub source_label: TrackRole,
}

impl F0Trace {
    /// Builds a trace, sorting frames by time (stable, so equal timestamps keep file order).
    pub fn new(mut frames: Vec<F0Frame>, source_label: TrackRole) -> Self {
        frames.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        F0Trace { frames, source_label }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.is_voiced()).count()
    }
}

/// Parses a `time,frequency,confidence` CSV into a trace.
///
/// Errors carry the 1-based line number of the offending row.
pub fn parse_f0_csv(bytes: &[u8], source_label: TrackRole) -> Result<F0Trace, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| csv_error(e, 1))?,
        None => {
            return Err(IngestError::Parse {
                line: 1,
                message: "empty file, expected header `time,frequency,confidence`".into(),
            })
        }
    };
    let header_fields: Vec<&str> = header.iter().collect();
    // tolerate a UTF-8 byte-order mark on the first field
    let first = header_fields.first().map(|s| s.trim_start_matches('\u{feff}'));
    if header_fields.len() != 3 || first != Some(F0_CSV_HEADER[0]) || header_fields[1..] != F0_CSV_HEADER[1..] {
        return Err(IngestError::Parse {
            line: 1,
            message: format!(
                "expected header `time,frequency,confidence`, found `{}`",
                header_fields.join(",")
            ),
        });
    }

    let mut frames = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != 3 {
            return Err(IngestError::Parse {
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let time_s = parse_field(&rec, 0, "time", line)?;
        let frequency_hz = parse_field(&rec, 1, "frequency", line)?;
        let confidence = parse_field(&rec, 2, "confidence", line)?;
        if time_s < 0.0 {
            return Err(IngestError::Parse {
                line,
                message: format!("time must be non-negative, got {time_s}"),
            });
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(IngestError::Parse {
                line,
                message: format!("confidence {confidence} outside [0, 1]"),
            });
        }
        frames.push(F0Frame {
            time_s,
            frequency_hz,
            confidence,
        });
    }
    Ok(F0Trace::new(frames, source_label))
}

/// Writes a trace in the format read by [`parse_f0_csv`]. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_f0_csv<W: std::io::Write>(trace: &F0Trace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", F0_CSV_HEADER.join(","))?;
    for f in &trace.frames {
        writeln!(out, "{},{},{}", f.time_s, f.frequency_hz, f.confidence)?;
    }
    out.flush()
}

fn parse_field(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64, IngestError> {
    let raw = rec.get(idx).unwrap_or("");
    let value: f64 = raw.parse().map_err(|_| IngestError::Parse {
        line,
        message: format!("{name} field `{raw}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(IngestError::Parse {
            line,
            message: format!("{name} field `{raw}` is not finite"),
        });
    }
    Ok(value)
}

fn csv_error(err: csv::Error, fallback_line: u64) -> IngestError {
    let line = err.position().map(|p| p.line()).unwrap_or(fallback_line);
    IngestError::Parse {
        line,
        message: err.to_string(),
    }
}

/// Keeps voiced frames whose confidence is at least `threshold`.
pub fn filter_confidence(trace: &F0Trace, threshold: f64) -> F0Trace {
    F0Trace {
        frames: trace
            .frames
            .iter()
            .filter(|f| f.is_voiced() && f.confidence >= threshold)
            .copied()
            .collect(),
        source_label: trace.source_label,
    }
}

/// `1200 * log2(frequency / tonic)`.
pub fn hz_to_cents(frequency_hz: f64, tonic_hz: f64) -> Result<f64, IngestError> {
    if !(frequency_hz > 0.0) {
        return Err(IngestError::Domain {
            what: "frequency",
            value: frequency_hz,
        });
    }
    if !(tonic_hz > 0.0) {
        return Err(IngestError::Domain {
            what: "tonic frequency",
            value: tonic_hz,
        });
    }
    Ok(1200.0 * (frequency_hz / tonic_hz).log2())
}

pub fn cents_to_hz(cents: f64, tonic_hz: f64) -> f64 {
    tonic_hz * (cents / 1200.0).exp2()
}

/// Rounds to the nearest multiple of `bin_cents`; exact half-bin ties go away from zero.
pub fn quantize_cents(value: f64, bin_cents: f64) -> f64 {
    (value / bin_cents).round() * bin_cents
}

/// Binning parameters shared by [`to_samples`] and [`PitchHistogram`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub bin_cents: f64,
    pub lo_cents: f64,
    pub hi_cents: f64,
    pub min_samples: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            bin_cents: DEFAULT_BIN_CENTS,
            lo_cents: DEFAULT_LO_CENTS,
            hi_cents: DEFAULT_HI_CENTS,
            min_samples: DEFAULT_MIN_SAMPLES,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.bin_cents > 0.0) || !self.bin_cents.is_finite() {
            return Err(IngestError::Config(format!(
                "bin width must be positive, got {}",
                self.bin_cents
            )));
        }
        if !(self.lo_cents < self.hi_cents) {
            return Err(IngestError::Config(format!(
                "range lower bound {} must be below upper bound {}",
                self.lo_cents, self.hi_cents
            )));
        }
        Ok(())
    }
}

/// Quantized tonic-relative cents values for one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentsSamples {
    pub values: Vec<f64>,
    pub tonic_hz: f64,
    pub bin_cents: f64,
    pub lo_cents: f64,
    pub hi_cents: f64,
    pub track: TrackRole,
}

/// Converts the voiced frames of an already confidence-filtered trace into
/// quantized cents within `[lo, hi]` (both inclusive).
pub fn to_samples(trace: &F0Trace, tonic_hz: f64, config: &SampleConfig) -> Result<CentsSamples, IngestError> {
    config.validate()?;
    if !(tonic_hz > 0.0) {
        return Err(IngestError::Domain {
            what: "tonic frequency",
            value: tonic_hz,
        });
    }
    let mut values = Vec::with_capacity(trace.frames.len());
    for frame in trace.frames.iter().filter(|f| f.is_voiced()) {
        let q = quantize_cents(hz_to_cents(frame.frequency_hz, tonic_hz)?, config.bin_cents);
        if q >= config.lo_cents && q <= config.hi_cents {
            values.push(q);
        }
    }
    if values.len() < config.min_samples.max(1) {
        return Err(IngestError::InsufficientData {
            track: trace.source_label,
            retained: values.len(),
            required: config.min_samples.max(1),
        });
    }
    Ok(CentsSamples {
        values,
        tonic_hz,
        bin_cents: config.bin_cents,
        lo_cents: config.lo_cents,
        hi_cents: config.hi_cents,
        track: trace.source_label,
    })
}

/// Counts of quantized cents values on the grid `lo, lo + bin, …, hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchHistogram {
    pub bin_cents: f64,
    pub lo_cents: f64,
    pub hi_cents: f64,
    pub counts: Vec<u64>,
}

impl PitchHistogram {
    /// Empty histogram over `[lo, hi]`. `hi - lo` should be a multiple of `bin_cents`.
    pub fn empty(bin_cents: f64, lo_cents: f64, hi_cents: f64) -> Self {
        let n_bins = ((hi_cents - lo_cents) / bin_cents).round() as usize + 1;
        PitchHistogram {
            bin_cents,
            lo_cents,
            hi_cents,
            counts: vec![0; n_bins],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.lo_cents + bin as f64 * self.bin_cents
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|b| self.center(b))
    }

    /// Index of the bin whose center is nearest `cents`, if within range.
    pub fn bin_of(&self, cents: f64) -> Option<usize> {
        let idx = ((cents - self.lo_cents) / self.bin_cents).round();
        if idx >= 0.0 && (idx as usize) < self.counts.len() {
            Some(idx as usize)
        } else {
            None
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn non_empty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Bin centers and counts of the occupied bins, in ascending cents order.
    pub fn occupied(&self) -> Vec<(f64, u64)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(b, &c)| (self.center(b), c))
            .collect()
    }

    /// Same counts with every bin center moved by `offset_cents`.
    pub fn shifted(&self, offset_cents: f64) -> Self {
        PitchHistogram {
            lo_cents: self.lo_cents + offset_cents,
            hi_cents: self.hi_cents + offset_cents,
            ..self.clone()
        }
    }
}

pub fn build_histogram(samples: &CentsSamples) -> Result<PitchHistogram, IngestError> {
    if samples.values.is_empty() {
        return Err(IngestError::InsufficientData {
            track: samples.track,
            retained: 0,
            required: 1,
        });
    }
    let mut hist = PitchHistogram::empty(samples.bin_cents, samples.lo_cents, samples.hi_cents);
    for &v in &samples.values {
        match hist.bin_of(v) {
            Some(b) => hist.counts[b] += 1,
            None => {
                return Err(IngestError::Config(format!(
                    "sample {v} falls outside the histogram range [{}, {}]",
                    samples.lo_cents, samples.hi_cents
                )))
            }
        }
    }
    Ok(hist)
}
