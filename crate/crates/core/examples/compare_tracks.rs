//! Contrast a near-grid instrument with an expressive voice: deviation
//! distributions and per-degree vocal-minus-instrument distances.
//!
//! Run: `cargo run --example compare_tracks`

use pitchscale::corpus::{analyze_traces, compare_tracks, epsilon_distribution, PipelineConfig};
use pitchscale::ingest::TrackRole;
use pitchscale::scale::{expected_degrees, KnownTuning, Quality};
use pitchscale::synth::{derive_seed, generate_trace, NoteSpec, ScaleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let mut analyses = Vec::new();
    for i in 0..8u64 {
        let tuning = KnownTuning::new(220.0, Quality::Major, Quality::Major);
        let degrees = expected_degrees(&tuning);
        let instrument: Vec<NoteSpec> = degrees
            .iter()
            .map(|d| NoteSpec::new(d.canonical_cents() + 2.0, 10.0, 1.0))
            .collect();
        let voice: Vec<NoteSpec> = degrees
            .iter()
            .enumerate()
            .map(|(j, d)| NoteSpec::new(d.canonical_cents() - 15.0 + (j as f64 * 3.0), 22.0, 1.0))
            .collect();
        let sep = generate_trace(
            &ScaleSpec::new(instrument, 220.0, 4000, derive_seed(5, 2 * i)),
            TrackRole::Seperewa,
        )?;
        let voc = generate_trace(
            &ScaleSpec::new(voice, 220.0, 4000, derive_seed(5, 2 * i + 1)),
            TrackRole::Vocals,
        )?;
        analyses.push(analyze_traces(&format!("song{i}"), &tuning, &sep, &voc, &config));
    }

    for role in TrackRole::ALL {
        if let Some(s) = epsilon_distribution(&analyses, role).summary {
            println!(
                "{role:<9} epsilon_S mean {:6.2}  std {:5.2}  (n = {})",
                s.mean, s.std, s.n
            );
        }
    }
    println!("\n{:<8} {:>5} {:>10} {:>8}", "degree", "songs", "mean", "std");
    for row in compare_tracks(&analyses) {
        println!(
            "{:<8} {:>5} {:>+10.2} {:>8.2}",
            row.degree, row.n_songs_matched, row.mean_distance_cents, row.std_distance_cents
        );
    }
    Ok(())
}
