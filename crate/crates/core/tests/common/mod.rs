#![allow(dead_code)]

//! Synthetic corpus builders shared by the integration suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pitchscale::scale::{expected_degrees, KnownTuning, Quality};
use pitchscale::synth::{derive_seed, NoteSpec, ScaleSpec, SongSpec};

pub const TONICS_HZ: [f64; 5] = [196.0, 220.0, 233.08, 261.63, 293.66];

pub fn random_tuning(rng: &mut ChaCha8Rng) -> KnownTuning {
    let q = |b: bool| if b { Quality::Major } else { Quality::Minor };
    KnownTuning::new(
        TONICS_HZ[rng.random_range(0..TONICS_HZ.len())],
        q(rng.random_bool(0.7)),
        q(rng.random_bool(0.7)),
    )
}

/// Expected-degree positions, shuffled, jittered by up to `max_offset`, and
/// thinned greedily so every kept pair is at least `min_gap` apart.
pub fn separated_notes(
    tuning: &KnownTuning,
    rng: &mut ChaCha8Rng,
    max_offset: f64,
    min_gap: f64,
    std_range: (f64, f64),
) -> Vec<NoteSpec> {
    let mut positions: Vec<f64> = expected_degrees(tuning)
        .into_iter()
        .map(|d| d.canonical_cents() + rng.random_range(-max_offset..=max_offset))
        .collect();
    positions.shuffle(rng);
    let mut kept: Vec<f64> = Vec::new();
    for p in positions {
        if kept.iter().all(|k| (k - p).abs() >= min_gap) {
            kept.push(p);
        }
    }
    kept.sort_by(f64::total_cmp);
    kept.into_iter()
        .map(|p| {
            NoteSpec::new(
                p,
                rng.random_range(std_range.0..=std_range.1),
                rng.random_range(0.6..=1.4),
            )
        })
        .collect()
}

/// Songs whose two tracks both sample well-separated expected degrees
/// (≥150 cents apart, std ≤ 20, 4000 fully voiced high-confidence frames).
pub fn round_trip_corpus(n_songs: usize, seed: u64) -> Vec<SongSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_songs)
        .map(|i| {
            let tuning = random_tuning(&mut rng);
            let mut track = |role: u64| {
                let notes = separated_notes(&tuning, &mut rng, 15.0, 150.0, (8.0, 20.0));
                ScaleSpec::new(notes, tuning.tonic_hz, 4000, derive_seed(seed, 2 * i as u64 + role))
            };
            SongSpec {
                id: format!("song{i:02}"),
                seperewa: track(0),
                vocals: track(1),
                tuning,
            }
        })
        .collect()
}

/// All six expected degrees at `offset` cents from their equal-tempered
/// positions in both tracks.
pub fn offset_corpus(n_songs: usize, offset: f64, seed: u64) -> Vec<SongSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_songs)
        .map(|i| {
            let tuning = random_tuning(&mut rng);
            let mut track = |role: u64| {
                let notes = expected_degrees(&tuning)
                    .into_iter()
                    .map(|d| {
                        NoteSpec::new(
                            d.canonical_cents() + offset,
                            rng.random_range(8.0..=18.0),
                            rng.random_range(0.6..=1.4),
                        )
                    })
                    .collect();
                ScaleSpec::new(notes, tuning.tonic_hz, 4000, derive_seed(seed, 2 * i as u64 + role))
            };
            SongSpec {
                id: format!("song{i:02}"),
                seperewa: track(0),
                vocals: track(1),
                tuning,
            }
        })
        .collect()
}

/// Instrument near the grid with narrow notes; voice with wide notes and
/// random ±25-cent degree offsets.
pub fn expressive_vocals_corpus(n_songs: usize, seed: u64) -> Vec<SongSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_songs)
        .map(|i| {
            let tuning = random_tuning(&mut rng);
            let degrees: Vec<f64> = expected_degrees(&tuning)
                .into_iter()
                .map(|d| d.canonical_cents())
                .collect();
            let seperewa = degrees
                .iter()
                .map(|&p| NoteSpec::new(p + rng.random_range(-3.0..=3.0), rng.random_range(8.0..=14.0), 1.0))
                .collect();
            let vocals = degrees
                .iter()
                .map(|&p| {
                    let off = if rng.random_bool(0.5) { 25.0 } else { -25.0 };
                    NoteSpec::new(p + off, rng.random_range(22.0..=28.0), 1.0)
                })
                .collect();
            SongSpec {
                id: format!("song{i:02}"),
                seperewa: ScaleSpec::new(seperewa, tuning.tonic_hz, 4000, derive_seed(seed, 2 * i as u64)),
                vocals: ScaleSpec::new(vocals, tuning.tonic_hz, 4000, derive_seed(seed, 2 * i as u64 + 1)),
                tuning,
            }
        })
        .collect()
}
