//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pitchscale::corpus::{
    aggregate_retrieval, analyze_corpus, epsilon_distribution, load_manifest, summarize, CorpusRun, PipelineConfig,
    SongAnalysis, TrackOutcome,
};
use pitchscale::ingest::{PitchHistogram, TrackRole};
use pitchscale::mixture::{fit_em, FitConfig, GaussianComponent};
use pitchscale::scale::{
    epsilon_s, expected_degrees, label_degree, merge_components, DegreeClass, KnownTuning, Quality, ScaleEstimate,
};
use pitchscale::synth::{generate_corpus, SongSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn run_corpus(songs: &[SongSpec], dir: &Path) -> CorpusRun {
    let manifest = generate_corpus(songs, dir).expect("generate corpus");
    let records = load_manifest(&manifest).expect("load manifest");
    analyze_corpus(&records, &PipelineConfig::default(), 0).expect("analyze corpus")
}

// Reference summary row: (label, mean, std) rounded to 2 decimals.
const REFERENCE_SUMMARY: [(&str, f64, f64); 7] = [
    ("n_in_tuning", 53.25, 29.04),
    ("seperewa retrieved", 34.88, 19.86),
    ("seperewa missing", 18.38, 11.34),
    ("seperewa unexpected", 10.42, 13.20),
    ("vocals retrieved", 40.25, 23.39),
    ("vocals missing", 13.00, 8.90),
    ("vocals unexpected", 10.75, 13.12),
];

// Per degree (semitones): retrieved and unexpected counts for (seperewa, vocals).
// Missing follows as n_in_tuning - retrieved.
const REFERENCE_RETRIEVED: [(DegreeClass, usize, usize); 8] = [
    (DegreeClass::Tonic, 50, 65),
    (DegreeClass::Major2, 39, 49),
    (DegreeClass::Minor3, 2, 1),
    (DegreeClass::Major3, 39, 44),
    (DegreeClass::Fourth, 47, 55),
    (DegreeClass::Fifth, 58, 61),
    (DegreeClass::Minor6, 2, 2),
    (DegreeClass::Major6, 42, 45),
];
const REFERENCE_UNEXPECTED: [(DegreeClass, usize, usize); 8] = [
    (DegreeClass::Minor2, 19, 14),
    (DegreeClass::Minor3, 17, 26),
    (DegreeClass::Major3, 1, 2),
    (DegreeClass::Tritone, 12, 11),
    (DegreeClass::Minor6, 6, 8),
    (DegreeClass::Major6, 1, 1),
    (DegreeClass::Minor7, 25, 25),
    (DegreeClass::Major7, 44, 42),
];

/// 71 songs (3 with minor third and sixth, 68 with major) whose found degrees
/// reproduce every count of the reference retrieval table.
fn reference_corpus() -> Vec<SongAnalysis> {
    let tunings: Vec<KnownTuning> = (0..71)
        .map(|i| {
            let q = if i < 3 { Quality::Minor } else { Quality::Major };
            KnownTuning::new(220.0, q, q)
        })
        .collect();
    let mut found: PerRole = [vec![BTreeSet::new(); 71], vec![BTreeSet::new(); 71]];
    for (r, role_found) in found.iter_mut().enumerate() {
        let pick = |(d, s, v): &(DegreeClass, usize, usize)| (*d, if r == 0 { *s } else { *v });
        let retrieved = REFERENCE_RETRIEVED.iter().map(pick).map(|(d, c)| (d, c, true));
        let unexpected = REFERENCE_UNEXPECTED.iter().map(pick).map(|(d, c)| (d, c, false));
        for (slot, (d, count, in_tuning)) in retrieved.chain(unexpected).enumerate() {
            let eligible: Vec<usize> = (0..71)
                .filter(|&i| expected_degrees(&tunings[i]).contains(&d) == in_tuning)
                .collect();
            assert!(count <= eligible.len());
            let start = slot * 7 + r * 3;
            for j in 0..count {
                role_found[eligible[(start + j) % eligible.len()]].insert(d);
            }
        }
    }
    (0..71)
        .map(|i| {
            let outcome = |r: usize| {
                let comps = found[r][i]
                    .iter()
                    .map(|d| GaussianComponent::new(d.canonical_cents(), 10.0, 1.0 / found[r][i].len() as f64))
                    .collect();
                TrackOutcome::Analyzed(pitchscale::corpus::TrackResult {
                    frames_total: 0,
                    frames_retained: 0,
                    estimate: ScaleEstimate::from_components(comps, &tunings[i]).expect("non-empty song"),
                })
            };
            SongAnalysis {
                id: format!("t{i:02}"),
                tuning: tunings[i],
                expected: expected_degrees(&tunings[i]),
                seperewa: outcome(0),
                vocals: outcome(1),
            }
        })
        .collect()
}

type PerRole = [Vec<BTreeSet<DegreeClass>>; 2];

fn retrieval_summary_arithmetic() -> Outcome {
    let n = summarize(&[71.0, 71.0, 3.0, 68.0, 71.0, 71.0, 3.0, 68.0]).unwrap();
    ensure!(
        round2(n.mean) == 53.25 && round2(n.std) == 29.04,
        "n_in_tuning column gave {n:?}"
    );
    let s = summarize(&[50.0, 39.0, 2.0, 39.0, 47.0, 58.0, 2.0, 42.0]).unwrap();
    ensure!(
        round2(s.mean) == 34.88 && round2(s.std) == 19.86,
        "retrieved column gave {s:?}"
    );

    let table = aggregate_retrieval(&reference_corpus());
    let sm = &table.summary;
    let got = [
        sm.n_in_tuning,
        sm.tracks.seperewa.retrieved,
        sm.tracks.seperewa.missing,
        sm.tracks.seperewa.unexpected,
        sm.tracks.vocals.retrieved,
        sm.tracks.vocals.missing,
        sm.tracks.vocals.unexpected,
    ];
    for ((label, mean, std), g) in REFERENCE_SUMMARY.iter().zip(got) {
        let g = g.ok_or(format!("{label}: no summary"))?;
        ensure!(
            close(round2(g.mean), *mean) && close(round2(g.std), *std),
            "{label}: got {:.4} ± {:.4}, expected {mean} ± {std}",
            g.mean,
            g.std
        );
    }
    Ok(format!(
        "53.25 ± {:.2}; 71-song reconstruction matches all 7 summary columns",
        n.std
    ))
}

fn labeling_oracle() -> Outcome {
    let l = label_degree(930.0).map_err(|e| e.to_string())?;
    ensure!(
        l.degree == DegreeClass::Major6 && close(l.offset_cents, 30.0),
        "930 → {} {:+}",
        l.degree,
        l.offset_cents
    );
    Ok("930 cents → Major6 +30".into())
}

fn round_trip() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let songs = common::round_trip_corpus(20, 2024);
    let run = run_corpus(&songs, tmp.path());
    ensure!(run.failures.is_empty(), "song failures: {:?}", run.failures);
    let mut worst: f64 = 0.0;
    for (spec, a) in songs.iter().zip(&run.analyses) {
        for role in TrackRole::ALL {
            let est = a.estimate(role).ok_or(format!("{} {role} failed", a.id))?;
            let track = spec.track(role);
            for n in &track.notes {
                ensure!(n.std_cents <= 20.0, "generator produced std {}", n.std_cents);
            }
            ensure!(track.n_frames >= 3000, "generator produced {} frames", track.n_frames);
            let generating: BTreeSet<DegreeClass> = track
                .notes
                .iter()
                .map(|n| label_degree(n.position_cents).unwrap().degree)
                .collect();
            ensure!(
                generating.is_subset(&est.retrieval.retrieved),
                "{} {role}: generating {generating:?}, retrieved {:?}",
                a.id,
                est.retrieval.retrieved
            );
            for c in &est.components {
                let d = track
                    .notes
                    .iter()
                    .map(|n| (n.position_cents - c.mean_cents).abs())
                    .fold(f64::INFINITY, f64::min);
                ensure!(
                    d <= 10.0,
                    "{} {role}: component at {} is {d:.2} cents from any note",
                    a.id,
                    c.mean_cents
                );
                worst = worst.max(d);
            }
            for n in &track.notes {
                let d = est
                    .components
                    .iter()
                    .map(|c| (n.position_cents - c.mean_cents).abs())
                    .fold(f64::INFINITY, f64::min);
                ensure!(
                    d <= 10.0,
                    "{} {role}: note at {} unrecovered ({d:.2})",
                    a.id,
                    n.position_cents
                );
            }
        }
    }
    Ok(format!("20 songs × 2 tracks; worst component error {worst:.2} cents"))
}

fn epsilon_calibration() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let grid = run_corpus(&common::offset_corpus(20, 0.0, 7), &tmp.path().join("grid"));
    let shifted = run_corpus(&common::offset_corpus(20, 30.0, 8), &tmp.path().join("shift"));
    let values = |run: &CorpusRun| -> Result<Vec<f64>, String> {
        ensure!(run.failures.is_empty(), "song failures: {:?}", run.failures);
        let mut v = Vec::new();
        for role in TrackRole::ALL {
            let d = epsilon_distribution(&run.analyses, role);
            ensure!(d.values.len() == run.analyses.len(), "{role}: failed tracks");
            v.extend(d.values.iter().map(|e| e.epsilon_s));
        }
        Ok(v)
    };
    let g = values(&grid)?;
    let s = values(&shifted)?;
    let gmax = g.iter().cloned().fold(f64::MIN, f64::max);
    ensure!(g.iter().all(|&e| e < 5.0), "equal-tempered corpus max ε_S {gmax}");
    let (smin, smax) = (
        s.iter().cloned().fold(f64::MAX, f64::min),
        s.iter().cloned().fold(f64::MIN, f64::max),
    );
    ensure!(
        s.iter().all(|e| (20.0..=40.0).contains(e)),
        "+30 corpus ε_S range [{smin}, {smax}]"
    );
    let single = epsilon_s(&[GaussianComponent::new(950.0, 10.0, 1.0)]).map_err(|e| e.to_string())?;
    ensure!(single == 50.0, "single component at 950 gave {single}");
    Ok(format!(
        "grid max {gmax:.2}; +30 range [{smin:.2}, {smax:.2}]; 950 → {single}"
    ))
}

fn random_histogram(rng: &mut ChaCha8Rng) -> PitchHistogram {
    let mut h = PitchHistogram::empty(10.0, -200.0, 1200.0);
    if rng.random_bool(0.5) {
        for _ in 0..rng.random_range(1..=7) {
            let mu: f64 = rng.random_range(-200.0..1200.0);
            let sd: f64 = rng.random_range(5.0..60.0);
            let normal = Normal::new(mu, sd).unwrap();
            for _ in 0..rng.random_range(20..600) {
                if let Some(b) = h.bin_of(normal.sample(rng)) {
                    h.counts[b] += 1;
                }
            }
        }
    } else {
        let density = rng.random_range(0.02..0.6);
        for c in h.counts.iter_mut() {
            if rng.random_bool(density) {
                *c = rng.random_range(1..200);
            }
        }
    }
    if h.total() == 0 {
        let b = rng.random_range(0..h.n_bins());
        h.counts[b] = 1;
    }
    h
}

fn em_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE_4);
    let mut iters = 0usize;
    for case in 0..1000 {
        let h = random_histogram(&mut rng);
        let k = rng.random_range(1..=14).min(h.non_empty_bins());
        let cfg = FitConfig {
            seed: rng.random(),
            ..Default::default()
        };
        let m = fit_em(&h, k, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        iters += m.iterations;
        for (i, w) in m.ll_history.windows(2).enumerate() {
            ensure!(
                w[1] >= w[0] - 1e-9,
                "case {case}: LL fell at iteration {i}: {} → {}",
                w[0],
                w[1]
            );
        }
        ensure!(
            (m.weight_sum() - 1.0).abs() <= 1e-9,
            "case {case}: weights sum to {}",
            m.weight_sum()
        );
        for c in &m.components {
            ensure!(c.std_cents >= 10.0, "case {case}: std {}", c.std_cents);
        }
    }
    Ok(format!("1000 histograms, {iters} EM iterations"))
}

fn merge_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3E_26E);
    let mut merged_total = 0usize;
    for case in 0..10_000 {
        let n = rng.random_range(1..=16);
        let comps: Vec<GaussianComponent> = (0..n)
            .map(|_| {
                GaussianComponent::new(
                    rng.random_range(-200.0..1200.0),
                    rng.random_range(10.0..60.0),
                    rng.random_range(0.001..1.0),
                )
            })
            .collect();
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        let out = merge_components(&comps, 50.0);
        merged_total += n - out.len();
        ensure!(merge_components(&out, 50.0) == out, "case {case}: not a fixpoint");
        for w in out.windows(2) {
            ensure!(
                w[1].mean_cents - w[0].mean_cents >= 50.0,
                "case {case}: separation {:?}",
                w
            );
        }
        let after: f64 = out.iter().map(|c| c.weight).sum();
        ensure!((after - total).abs() <= 1e-9, "case {case}: weight {total} → {after}");
    }
    Ok(format!("10000 lists, {merged_total} merges"))
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = generate_corpus(&common::round_trip_corpus(12, 77), &tmp.path().join("in")).unwrap();
    let mut outputs = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "4")] {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_pitchscale"))
            .args([
                "analyze",
                manifest.to_str().unwrap(),
                out.to_str().unwrap(),
                "--seed",
                "42",
            ])
            .env(pitchscale::cli::WORKERS_ENV, workers)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "analyze exited {:?}", status.status.code());
        outputs.push(dir_bytes(&out));
    }
    ensure!(outputs[0].keys().eq(outputs[1].keys()), "file sets differ");
    for (name, bytes) in &outputs[0] {
        ensure!(&outputs[1][name] == bytes, "{name} differs");
    }
    Ok(format!(
        "{} files byte-identical across 2 runs (1 and 4 workers)",
        outputs[0].len()
    ))
}

fn direction_of_effect() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = run_corpus(&common::expressive_vocals_corpus(20, 9), tmp.path());
    let mean = |role| {
        epsilon_distribution(&run.analyses, role)
            .summary
            .map(|s| s.mean)
            .ok_or(format!("{role}: no ε_S values"))
    };
    let (s, v) = (mean(TrackRole::Seperewa)?, mean(TrackRole::Vocals)?);
    ensure!(v > s, "vocal mean ε_S {v:.2} not above seperewa {s:.2}");
    Ok(format!("mean ε_S vocals {v:.2} > seperewa {s:.2}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("retrieval_summary_oracle", retrieval_summary_arithmetic),
        ("degree_labeling_oracle", labeling_oracle),
        ("synthetic_round_trip", round_trip),
        ("epsilon_calibration", epsilon_calibration),
        ("em_properties", em_properties),
        ("merge_properties", merge_properties),
        ("determinism", determinism),
        ("direction_of_effect", direction_of_effect),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
