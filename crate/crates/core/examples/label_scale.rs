//! Merge close components, score equal-temperament deviation and label degrees.
//!
//! Run: `cargo run --example label_scale`

use pitchscale::mixture::GaussianComponent;
use pitchscale::scale::{
    epsilon_s, label_degree, merge_components, KnownTuning, Quality, ScaleEstimate, DEFAULT_MERGE_RADIUS_CENTS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = vec![
        GaussianComponent::new(-4.0, 12.0, 0.20),
        GaussianComponent::new(188.0, 15.0, 0.10),
        GaussianComponent::new(215.0, 14.0, 0.08),
        GaussianComponent::new(365.0, 18.0, 0.15),
        GaussianComponent::new(498.0, 12.0, 0.17),
        GaussianComponent::new(702.0, 11.0, 0.20),
        GaussianComponent::new(930.0, 16.0, 0.10),
    ];
    let merged = merge_components(&raw, DEFAULT_MERGE_RADIUS_CENTS);
    println!("{} components, {} after merging", raw.len(), merged.len());
    println!("epsilon_S = {:.2} cents", epsilon_s(&merged)?);

    for c in &merged {
        let l = label_degree(c.mean_cents)?;
        println!(
            "  {:8.2} cents -> {:<8} {:+6.2}",
            c.mean_cents, l.degree, l.offset_cents
        );
    }

    let tuning = KnownTuning::new(220.0, Quality::Major, Quality::Major);
    let est = ScaleEstimate::from_components(merged, &tuning)?;
    let r = &est.retrieval;
    println!("retrieved  {:?}", r.retrieved);
    println!("missing    {:?}", r.missing);
    println!("unexpected {:?}", r.unexpected);
    Ok(())
}
