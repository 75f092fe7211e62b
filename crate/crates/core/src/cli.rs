//! Command-line front end: `analyze`, `song` and `synth`.
//!
//! Exit codes: 0 success (including partial failure), 1 output I/O error,
//! 2 argument error, 3 input parse error, 4 every song failed.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{
    analyze_corpus, analyze_song, build_report, load_manifest, CorpusError, PipelineConfig, SongRecord,
    EPSILON_DEFINITION,
};
use crate::ingest::{SampleConfig, TrackRole};
use crate::mixture::FitConfig;
use crate::report::{write_json, write_reports};
use crate::scale::{KnownTuning, Quality, ScaleConfig};
use crate::synth::{generate_corpus, CorpusSpecFile};

pub const WORKERS_ENV: &str = "PITCHSCALE_WORKERS";
pub const RUN_METADATA_FILE: &str = "run.json";
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const FIT_PROTOCOL: &str =
    "weighted EM on histogram bin centers for every k in [k_min, min(k_max, occupied bins)]; \
     peak-picking initialization with random fill; stop on relative log-likelihood change or max_iters; \
     prune light components; select minimum BIC (3 parameters per component), ties to smaller k; \
     merge adjacent components closer than the merge radius";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_ALL_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pitchscale", version, about = "Scale approximation from F0 traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze every song in a manifest and write reports.
    Analyze {
        /// Corpus manifest (JSON).
        manifest: PathBuf,
        /// Output directory; created if missing.
        out_dir: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Worker threads; 0 uses one per core.
        #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
        workers: usize,
    },
    /// Analyze one song and print its analysis as JSON.
    Song {
        seperewa_csv: PathBuf,
        vocals_csv: PathBuf,
        #[arg(long, value_parser = positive_hz, allow_negative_numbers = true)]
        tonic_hz: f64,
        #[arg(long)]
        third: Quality,
        #[arg(long)]
        sixth: Quality,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Generate a synthetic corpus from a JSON spec and print the manifest path.
    Synth { spec: PathBuf, out_dir: PathBuf },
}

fn positive_hz(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive frequency, got {s}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = crate::ingest::DEFAULT_CONFIDENCE_THRESHOLD)]
    pub confidence_threshold: f64,
    #[arg(long, default_value_t = crate::ingest::DEFAULT_BIN_CENTS)]
    pub bin_cents: f64,
    #[arg(long, default_value_t = crate::scale::DEFAULT_MERGE_RADIUS_CENTS)]
    pub merge_radius: f64,
    #[arg(long, default_value_t = crate::ingest::DEFAULT_LO_CENTS, allow_negative_numbers = true)]
    pub range_lo: f64,
    #[arg(long, default_value_t = crate::ingest::DEFAULT_HI_CENTS, allow_negative_numbers = true)]
    pub range_hi: f64,
    #[arg(long, default_value_t = crate::ingest::DEFAULT_MIN_SAMPLES)]
    pub min_samples: usize,
    #[arg(long, default_value_t = FitConfig::default().k_min)]
    pub k_min: usize,
    #[arg(long, default_value_t = FitConfig::default().k_max)]
    pub k_max: usize,
    #[arg(long, default_value_t = FitConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = FitConfig::default().rel_tol)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = FitConfig::default().variance_floor_cents)]
    pub variance_floor: f64,
    #[arg(long, default_value_t = FitConfig::default().min_weight)]
    pub min_weight: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PipelineArgs {
    pub fn to_config(&self) -> PipelineConfig {
        PipelineConfig {
            confidence_threshold: self.confidence_threshold,
            sample: SampleConfig {
                bin_cents: self.bin_cents,
                lo_cents: self.range_lo,
                hi_cents: self.range_hi,
                min_samples: self.min_samples,
            },
            scale: ScaleConfig {
                fit: FitConfig {
                    k_min: self.k_min,
                    k_max: self.k_max,
                    max_iters: self.max_iters,
                    rel_tol: self.rel_tol,
                    variance_floor_cents: self.variance_floor,
                    min_weight: self.min_weight,
                    seed: self.seed,
                },
                merge_radius_cents: self.merge_radius,
            },
        }
    }
}

/// Settings of one `analyze` invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub pipeline: PipelineConfig,
    pub workers: usize,
}

/// Every setting that differs from its default, in flag order.
pub fn non_default_settings(config: &PipelineConfig) -> Vec<NonDefault> {
    let d = PipelineConfig::default();
    let (f, df) = (&config.scale.fit, &d.scale.fit);
    let pairs: [(&str, String, String); 13] = [
        (
            "--confidence-threshold",
            config.confidence_threshold.to_string(),
            d.confidence_threshold.to_string(),
        ),
        (
            "--bin-cents",
            config.sample.bin_cents.to_string(),
            d.sample.bin_cents.to_string(),
        ),
        (
            "--merge-radius",
            config.scale.merge_radius_cents.to_string(),
            d.scale.merge_radius_cents.to_string(),
        ),
        (
            "--range-lo",
            config.sample.lo_cents.to_string(),
            d.sample.lo_cents.to_string(),
        ),
        (
            "--range-hi",
            config.sample.hi_cents.to_string(),
            d.sample.hi_cents.to_string(),
        ),
        (
            "--min-samples",
            config.sample.min_samples.to_string(),
            d.sample.min_samples.to_string(),
        ),
        ("--k-min", f.k_min.to_string(), df.k_min.to_string()),
        ("--k-max", f.k_max.to_string(), df.k_max.to_string()),
        ("--max-iters", f.max_iters.to_string(), df.max_iters.to_string()),
        ("--rel-tol", f.rel_tol.to_string(), df.rel_tol.to_string()),
        (
            "--variance-floor",
            f.variance_floor_cents.to_string(),
            df.variance_floor_cents.to_string(),
        ),
        ("--min-weight", f.min_weight.to_string(), df.min_weight.to_string()),
        ("--seed", f.seed.to_string(), df.seed.to_string()),
    ];
    pairs
        .into_iter()
        .filter(|(_, value, default)| value != default)
        .map(|(flag, value, default)| NonDefault {
            flag: flag.to_string(),
            value,
            default,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonDefault {
    pub flag: String,
    pub value: String,
    pub default: String,
}

/// Contents of `run.json`. Holds no timestamps or absolute paths, so identical
/// runs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub manifest: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub non_default: Vec<NonDefault>,
    pub fit_protocol: String,
    pub epsilon_definition: String,
    pub songs_total: usize,
    pub songs_analyzed: usize,
    pub songs_failed: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
    #[error("all {0} songs failed")]
    AllFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Output(_) => EXIT_IO,
            CliError::AllFailed(_) => EXIT_ALL_FAILED,
        }
    }
}

fn check_config(config: &PipelineConfig) -> Result<(), CliError> {
    config.validate().map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeOutcome {
    pub songs_total: usize,
    pub songs_analyzed: usize,
    pub songs_failed: usize,
    pub files_written: Vec<PathBuf>,
}

/// A song counts as failed when its files could not be read or neither of
/// its tracks could be analyzed.
pub fn cmd_analyze(config: &RunConfig) -> Result<AnalyzeOutcome, CliError> {
    check_config(&config.pipeline)?;
    let records: Vec<SongRecord> = load_manifest(&config.manifest).map_err(|e| CliError::Input(e.to_string()))?;
    log::info!("analyzing {} songs from {}", records.len(), config.manifest.display());
    let run = analyze_corpus(&records, &config.pipeline, config.workers).map_err(|e| match e {
        CorpusError::Config(m) => CliError::Usage(m),
        other => CliError::Input(other.to_string()),
    })?;
    for f in &run.failures {
        log::warn!("song {}: {}", f.id, f.error);
    }
    let report = build_report(&run);
    let mut files = write_reports(&config.out_dir, &run, &report).map_err(|e| CliError::Output(e.to_string()))?;

    let songs_analyzed = run
        .analyses
        .iter()
        .filter(|a| TrackRole::ALL.iter().any(|&r| !a.track(r).is_failed()))
        .count();
    let songs_failed = records.len() - songs_analyzed;
    let meta = RunMetadata {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        manifest: config
            .manifest
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        seed: config.pipeline.scale.fit.seed,
        config: config.pipeline,
        non_default: non_default_settings(&config.pipeline),
        fit_protocol: FIT_PROTOCOL.to_string(),
        epsilon_definition: EPSILON_DEFINITION.to_string(),
        songs_total: records.len(),
        songs_analyzed,
        songs_failed,
    };
    log::info!(
        "{songs_analyzed} of {} songs analyzed; reports in {}",
        records.len(),
        config.out_dir.display()
    );
    let meta_path = config.out_dir.join(RUN_METADATA_FILE);
    write_json(&meta_path, &meta).map_err(|e| CliError::Output(e.to_string()))?;
    files.push(meta_path);

    if !records.is_empty() && songs_analyzed == 0 {
        return Err(CliError::AllFailed(records.len()));
    }
    Ok(AnalyzeOutcome {
        songs_total: records.len(),
        songs_analyzed,
        songs_failed,
        files_written: files,
    })
}

/// Returns the analysis as pretty JSON.
pub fn cmd_song(
    seperewa_csv: &Path,
    vocals_csv: &Path,
    tuning: KnownTuning,
    config: &PipelineConfig,
) -> Result<String, CliError> {
    check_config(config)?;
    let record = SongRecord {
        id: "song".to_string(),
        seperewa_trace_path: seperewa_csv.to_path_buf(),
        vocals_trace_path: vocals_csv.to_path_buf(),
        tuning,
    };
    let analysis = analyze_song(&record, config).map_err(|e| CliError::Input(e.to_string()))?;
    let json = serde_json::to_string_pretty(&analysis).map_err(|e| CliError::Output(e.to_string()))?;
    if analysis.seperewa.is_failed() && analysis.vocals.is_failed() {
        println!("{json}");
        return Err(CliError::AllFailed(1));
    }
    Ok(json)
}

/// Returns the path of the written manifest.
pub fn cmd_synth(spec: &Path, out_dir: &Path) -> Result<PathBuf, CliError> {
    let text = fs::read_to_string(spec).map_err(|e| CliError::Input(format!("{}: {e}", spec.display())))?;
    let songs = CorpusSpecFile::from_json(&text)
        .and_then(CorpusSpecFile::into_songs)
        .map_err(|e| CliError::Input(format!("{}: {e}", spec.display())))?;
    generate_corpus(&songs, out_dir).map_err(|e| CliError::Output(e.to_string()))
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Analyze {
            manifest,
            out_dir,
            pipeline,
            workers,
        } => cmd_analyze(&RunConfig {
            manifest,
            out_dir,
            pipeline: pipeline.to_config(),
            workers,
        })
        .map(|o| {
            if o.songs_failed > 0 {
                eprintln!(
                    "{} of {} songs failed; see {}",
                    o.songs_failed,
                    o.songs_total,
                    crate::report::ERRORS_CSV
                );
            }
        }),
        Command::Song {
            seperewa_csv,
            vocals_csv,
            tonic_hz,
            third,
            sixth,
            pipeline,
        } => cmd_song(
            &seperewa_csv,
            &vocals_csv,
            KnownTuning::new(tonic_hz, third, sixth),
            &pipeline.to_config(),
        )
        .map(|json| println!("{json}")),
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir).map(|p| println!("{}", p.display())),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}
