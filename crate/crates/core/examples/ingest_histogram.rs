//! Parse an F0 trace, drop low-confidence frames, convert to cents and bin.
//!
//! Run: `cargo run --example ingest_histogram [trace.csv] [tonic_hz]`

use pitchscale::ingest::{
    build_histogram, filter_confidence, parse_f0_csv, to_samples, SampleConfig, TrackRole, DEFAULT_CONFIDENCE_THRESHOLD,
};
use pitchscale::synth::{generate_trace, NoteSpec, ScaleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let (trace, tonic) = match args.get(1) {
        Some(path) => {
            let tonic: f64 = args.get(2).map(|t| t.parse()).transpose()?.unwrap_or(220.0);
            (parse_f0_csv(&std::fs::read(path)?, TrackRole::Seperewa)?, tonic)
        }
        None => {
            let notes = vec![
                NoteSpec::new(0.0, 12.0, 1.0),
                NoteSpec::new(390.0, 15.0, 0.8),
                NoteSpec::new(700.0, 12.0, 1.0),
            ];
            let mut spec = ScaleSpec::new(notes, 220.0, 2000, 1);
            spec.confidence_range = [0.5, 1.0];
            spec.unvoiced_fraction = 0.1;
            (generate_trace(&spec, TrackRole::Seperewa)?, 220.0)
        }
    };

    let kept = filter_confidence(&trace, DEFAULT_CONFIDENCE_THRESHOLD);
    let samples = to_samples(&kept, tonic, &SampleConfig::default())?;
    let hist = build_histogram(&samples)?;
    println!(
        "{} frames, {} above confidence {}, {} samples in [{}, {}] cents",
        trace.len(),
        kept.len(),
        DEFAULT_CONFIDENCE_THRESHOLD,
        samples.values.len(),
        hist.lo_cents,
        hist.hi_cents
    );
    let peak = hist.counts.iter().copied().max().unwrap_or(1);
    for (center, count) in hist.occupied() {
        if count * 20 >= peak {
            println!("{center:>7} {count:>5} {}", "#".repeat((count * 50 / peak) as usize));
        }
    }
    Ok(())
}
