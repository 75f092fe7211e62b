//! Per-degree retrieved / missing / unexpected counts with column summaries.
//!
//! Run: `cargo run --example retrieval_table`

use pitchscale::corpus::{aggregate_retrieval, SongAnalysis, TrackOutcome, TrackResult};
use pitchscale::ingest::TrackRole;
use pitchscale::mixture::GaussianComponent;
use pitchscale::scale::{expected_degrees, KnownTuning, Quality, ScaleEstimate};

fn estimate(positions: &[f64], tuning: &KnownTuning) -> TrackOutcome {
    let w = 1.0 / positions.len() as f64;
    let comps = positions.iter().map(|&p| GaussianComponent::new(p, 12.0, w)).collect();
    TrackOutcome::Analyzed(TrackResult {
        frames_total: 0,
        frames_retained: 0,
        estimate: ScaleEstimate::from_components(comps, tuning).expect("valid components"),
    })
}

fn main() {
    let songs = [
        (
            Quality::Major,
            Quality::Major,
            vec![0.0, 200.0, 400.0, 700.0, 900.0],
            vec![0.0, 390.0, 500.0, 700.0, 1080.0],
        ),
        (
            Quality::Major,
            Quality::Minor,
            vec![0.0, 210.0, 500.0, 700.0, 790.0],
            vec![10.0, 300.0, 700.0, 800.0],
        ),
        (
            Quality::Minor,
            Quality::Minor,
            vec![0.0, 300.0, 500.0, 800.0, 1000.0],
            vec![0.0, 200.0, 310.0, 500.0],
        ),
    ];
    let analyses: Vec<SongAnalysis> = songs
        .iter()
        .enumerate()
        .map(|(i, (third, sixth, sep, voc))| {
            let tuning = KnownTuning::new(220.0, *third, *sixth);
            SongAnalysis {
                id: format!("song{i}"),
                expected: expected_degrees(&tuning),
                seperewa: estimate(sep, &tuning),
                vocals: estimate(voc, &tuning),
                tuning,
            }
        })
        .collect();

    let table = aggregate_retrieval(&analyses);
    let cell = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
    println!(
        "{:<8} {:>4} | {:>4} {:>4} {:>4} | {:>4} {:>4} {:>4}",
        "degree", "n", "ret", "mis", "unx", "ret", "mis", "unx"
    );
    for row in &table.rows {
        let mut line = format!("{:<8} {:>4}", row.degree, cell(row.n_in_tuning));
        for role in TrackRole::ALL {
            let c = row.tracks.get(role);
            line += &format!(" | {:>4} {:>4} {:>4}", cell(c.retrieved), cell(c.missing), c.unexpected);
        }
        println!("{line}");
    }
    if let Some(s) = table.summary.n_in_tuning {
        println!("n_in_tuning: mean {:.2} ± {:.2} (population std)", s.mean, s.std);
    }
}
