//! Generate a synthetic corpus, analyze it in parallel and write every report.
//!
//! Run: `cargo run --example analyze_corpus [out_dir]`

use std::path::PathBuf;

use pitchscale::corpus::{analyze_corpus, build_report, load_manifest, PipelineConfig};
use pitchscale::report::write_reports;
use pitchscale::scale::{expected_degrees, KnownTuning, Quality};
use pitchscale::synth::{derive_seed, generate_corpus, NoteSpec, ScaleSpec, SongSpec};

fn song(i: u64, tuning: KnownTuning) -> SongSpec {
    let notes = |spread: f64, std: f64| {
        expected_degrees(&tuning)
            .into_iter()
            .enumerate()
            .map(|(j, d)| NoteSpec::new(d.canonical_cents() + spread * ((j % 3) as f64 - 1.0), std, 1.0))
            .collect()
    };
    SongSpec {
        id: format!("song{i:02}"),
        seperewa: ScaleSpec::new(notes(4.0, 10.0), tuning.tonic_hz, 3000, derive_seed(1, 2 * i)),
        vocals: ScaleSpec::new(notes(20.0, 20.0), tuning.tonic_hz, 3000, derive_seed(1, 2 * i + 1)),
        tuning,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pitchscale-example"));
    let songs: Vec<SongSpec> = (0..6)
        .map(|i| {
            let q = if i % 3 == 0 { Quality::Minor } else { Quality::Major };
            song(i, KnownTuning::new(200.0 + 10.0 * i as f64, Quality::Major, q))
        })
        .collect();

    let manifest = generate_corpus(&songs, &out.join("corpus"))?;
    let records = load_manifest(&manifest)?;
    let run = analyze_corpus(&records, &PipelineConfig::default(), 0)?;
    let report = build_report(&run);
    let written = write_reports(&out.join("report"), &run, &report)?;

    println!("analyzed {} songs, {} failed", run.analyses.len(), run.failures.len());
    for path in written {
        println!("  {}", path.display());
    }
    Ok(())
}
