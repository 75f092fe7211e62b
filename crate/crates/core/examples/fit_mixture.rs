//! Fit Gaussian mixtures for every candidate size and pick one by BIC.
//!
//! Run: `cargo run --example fit_mixture`

use pitchscale::ingest::{build_histogram, to_samples, SampleConfig, TrackRole};
use pitchscale::mixture::{fit_candidates, select_model, FitConfig};
use pitchscale::synth::{generate_trace, NoteSpec, ScaleSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let notes = [0.0, 200.0, 390.0, 500.0, 710.0, 880.0]
        .iter()
        .map(|&p| NoteSpec::new(p, 14.0, 1.0))
        .collect();
    let trace = generate_trace(&ScaleSpec::new(notes, 196.0, 4000, 3), TrackRole::Vocals)?;
    let hist = build_histogram(&to_samples(&trace, 196.0, &SampleConfig::default())?)?;
    let config = FitConfig::default();

    println!(
        "{:>3} {:>5} {:>6} {:>14} {:>12}",
        "k", "kept", "iters", "log-lik", "BIC"
    );
    for (k, fit) in fit_candidates(&hist, &config)? {
        match fit {
            Ok(m) => println!(
                "{k:>3} {:>5} {:>6} {:>14.2} {:>12.2}",
                m.k, m.iterations, m.log_likelihood, m.bic
            ),
            Err(e) => println!("{k:>3} failed: {e}"),
        }
    }

    let best = select_model(&hist, &config)?;
    println!("\nselected k = {} (BIC {:.2})", best.k, best.bic);
    for c in &best.components {
        println!(
            "  mean {:8.2}  std {:6.2}  weight {:.3}",
            c.mean_cents, c.std_cents, c.weight
        );
    }
    Ok(())
}
