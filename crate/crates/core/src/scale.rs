//! From fitted mixtures to scales.
//!
//! Nearby components are merged, the merged means are scored against the
//! 100-cent equal-tempered grid anchored on the tonic, and every component is
//! labeled with the scale degree it sits closest to plus a signed offset.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PitchHistogram;
use crate::mixture::{select_model, FitConfig, FitError, GaussianComponent};

pub const DEFAULT_MERGE_RADIUS_CENTS: f64 = 50.0;
pub const OCTAVE_CENTS: f64 = 1200.0;
pub const SEMITONE_CENTS: f64 = 100.0;

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("{0} is outside the labeling range [-200, 1200] cents")]
    OutOfRange(f64),
    #[error("no components to score")]
    NoComponents,
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// The twelve chromatic degrees above the tonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DegreeClass {
    Tonic,
    Minor2,
    Major2,
    Minor3,
    Major3,
    Fourth,
    Tritone,
    Fifth,
    Minor6,
    Major6,
    Minor7,
    Major7,
}

impl DegreeClass {
    pub const ALL: [DegreeClass; 12] = [
        DegreeClass::Tonic,
        DegreeClass::Minor2,
        DegreeClass::Major2,
        DegreeClass::Minor3,
        DegreeClass::Major3,
        DegreeClass::Fourth,
        DegreeClass::Tritone,
        DegreeClass::Fifth,
        DegreeClass::Minor6,
        DegreeClass::Major6,
        DegreeClass::Minor7,
        DegreeClass::Major7,
    ];

    pub fn semitones(self) -> usize {
        self as usize
    }

    pub fn from_semitones(semitones: usize) -> DegreeClass {
        DegreeClass::ALL[semitones % 12]
    }

    /// Equal-tempered position above the tonic, in `[0, 1100]`.
    pub fn canonical_cents(self) -> f64 {
        self.semitones() as f64 * SEMITONE_CENTS
    }

    pub fn name(self) -> &'static str {
        match self {
            DegreeClass::Tonic => "Tonic",
            DegreeClass::Minor2 => "Minor2",
            DegreeClass::Major2 => "Major2",
            DegreeClass::Minor3 => "Minor3",
            DegreeClass::Major3 => "Major3",
            DegreeClass::Fourth => "Fourth",
            DegreeClass::Tritone => "Tritone",
            DegreeClass::Fifth => "Fifth",
            DegreeClass::Minor6 => "Minor6",
            DegreeClass::Major6 => "Major6",
            DegreeClass::Minor7 => "Minor7",
            DegreeClass::Major7 => "Major7",
        }
    }
}

impl fmt::Display for DegreeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for DegreeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DegreeClass::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown degree `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeLabel {
    pub degree: DegreeClass,
    /// Signed deviation from the degree's equal-tempered position, in `[-50, 50)`.
    pub offset_cents: f64,
}

/// Third or sixth quality of a known tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Major,
    Minor,
}

impl FromStr for Quality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "major" => Ok(Quality::Major),
            "minor" => Ok(Quality::Minor),
            other => Err(format!("expected `major` or `minor`, got `{other}`")),
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Quality::Major => "major",
            Quality::Minor => "minor",
        })
    }
}

/// Instrument tuning as annotated for a song: tonic plus third/sixth quality.
/// The second is major, fourth and fifth are perfect, and there is no seventh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownTuning {
    pub tonic_hz: f64,
    pub third: Quality,
    pub sixth: Quality,
}

impl KnownTuning {
    pub fn new(tonic_hz: f64, third: Quality, sixth: Quality) -> Self {
        KnownTuning { tonic_hz, third, sixth }
    }
}

pub fn expected_degrees(tuning: &KnownTuning) -> BTreeSet<DegreeClass> {
    let third = match tuning.third {
        Quality::Major => DegreeClass::Major3,
        Quality::Minor => DegreeClass::Minor3,
    };
    let sixth = match tuning.sixth {
        Quality::Major => DegreeClass::Major6,
        Quality::Minor => DegreeClass::Minor6,
    };
    [
        DegreeClass::Tonic,
        DegreeClass::Major2,
        third,
        DegreeClass::Fourth,
        DegreeClass::Fifth,
        sixth,
    ]
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Retrieval {
    pub retrieved: BTreeSet<DegreeClass>,
    pub missing: BTreeSet<DegreeClass>,
    pub unexpected: BTreeSet<DegreeClass>,
}

pub fn classify_retrieval(found: &BTreeSet<DegreeClass>, expected: &BTreeSet<DegreeClass>) -> Retrieval {
    Retrieval {
        retrieved: found.intersection(expected).copied().collect(),
        missing: expected.difference(found).copied().collect(),
        unexpected: found.difference(expected).copied().collect(),
    }
}

/// Repeatedly merges the closest pair of components while they are less than
/// `radius` apart. The merged mean and std are weight-averaged, weights add.
/// Distance ties merge the lower pair first. Output is sorted by mean.
pub fn merge_components(components: &[GaussianComponent], radius: f64) -> Vec<GaussianComponent> {
    let mut comps = components.to_vec();
    comps.sort_by(|a, b| a.mean_cents.total_cmp(&b.mean_cents));
    loop {
        // in sorted order the closest pair is always adjacent
        let closest = comps
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1].mean_cents - w[0].mean_cents))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match closest {
            Some((i, dist)) if dist < radius => {
                let (a, b) = (comps[i], comps[i + 1]);
                let weight = a.weight + b.weight;
                let mean = if weight > 0.0 {
                    (a.mean_cents * a.weight + b.mean_cents * b.weight) / weight
                } else {
                    0.5 * (a.mean_cents + b.mean_cents)
                };
                let std = if weight > 0.0 {
                    (a.std_cents * a.weight + b.std_cents * b.weight) / weight
                } else {
                    0.5 * (a.std_cents + b.std_cents)
                };
                // keep the merged mean inside its neighbours' bracket
                let mean = mean.clamp(a.mean_cents, b.mean_cents);
                comps[i] = GaussianComponent::new(mean, std, weight);
                comps.remove(i + 1);
            }
            _ => return comps,
        }
    }
}

/// Signed distance from `cents` to the nearest multiple of 100, in `[-50, 50]`.
pub fn grid_deviation(cents: f64) -> f64 {
    cents - (cents / SEMITONE_CENTS).round() * SEMITONE_CENTS
}

/// Equal-temperament deviation score: the unweighted mean absolute distance of
/// the component means from the tonic-anchored 100-cent grid. 0 means every
/// component sits on an equal-tempered pitch, 50 means every one sits halfway
/// between two.
pub fn epsilon_s(components: &[GaussianComponent]) -> Result<f64, ScaleError> {
    if components.is_empty() {
        return Err(ScaleError::NoComponents);
    }
    let total: f64 = components.iter().map(|c| grid_deviation(c.mean_cents).abs()).sum();
    Ok((total / components.len() as f64).min(50.0))
}

/// Folds a tonic-relative position into `[0, 1200)`.
pub fn fold_octave(cents: f64) -> f64 {
    let folded = cents.rem_euclid(OCTAVE_CENTS);
    if folded >= OCTAVE_CENTS {
        0.0
    } else {
        folded
    }
}

/// Labels a tonic-relative position in `[-200, 1200]` with its nearest degree.
///
/// Positions are octave-folded first, so -180 reads as 1020 (a sharp minor
/// seventh). An offset of exactly +50 rounds up to the next degree.
pub fn label_degree(mean_cents: f64) -> Result<DegreeLabel, ScaleError> {
    if !(-200.0..=1200.0).contains(&mean_cents) {
        return Err(ScaleError::OutOfRange(mean_cents));
    }
    let folded = fold_octave(mean_cents);
    let step = ((folded + 50.0) / SEMITONE_CENTS).floor() as usize;
    Ok(DegreeLabel {
        degree: DegreeClass::from_semitones(step),
        offset_cents: folded - step as f64 * SEMITONE_CENTS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    pub fit: FitConfig,
    pub merge_radius_cents: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            fit: FitConfig::default(),
            merge_radius_cents: DEFAULT_MERGE_RADIUS_CENTS,
        }
    }
}

/// Approximated scale of one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    /// Merged components, sorted by mean.
    pub components: Vec<GaussianComponent>,
    /// One label per component, same order.
    pub labels: Vec<DegreeLabel>,
    pub epsilon_s: f64,
    /// Component count of the selected mixture before merging.
    pub selected_k: usize,
    pub bic: f64,
    pub retrieval: Retrieval,
}

impl ScaleEstimate {
    /// Builds an estimate from already-merged components.
    pub fn from_components(mut components: Vec<GaussianComponent>, tuning: &KnownTuning) -> Result<Self, ScaleError> {
        components.sort_by(|a, b| a.mean_cents.total_cmp(&b.mean_cents));
        let labels = components
            .iter()
            .map(|c| label_degree(c.mean_cents))
            .collect::<Result<Vec<_>, _>>()?;
        let epsilon_s = epsilon_s(&components)?;
        let found: BTreeSet<DegreeClass> = labels.iter().map(|l| l.degree).collect();
        Ok(ScaleEstimate {
            selected_k: components.len(),
            bic: f64::NAN,
            retrieval: classify_retrieval(&found, &expected_degrees(tuning)),
            components,
            labels,
            epsilon_s,
        })
    }

    /// Distinct degrees carried by at least one component.
    pub fn found_degrees(&self) -> BTreeSet<DegreeClass> {
        self.labels.iter().map(|l| l.degree).collect()
    }

    /// The heaviest component labeled `degree`, if any.
    pub fn strongest(&self, degree: DegreeClass) -> Option<(&GaussianComponent, &DegreeLabel)> {
        self.components
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.degree == degree)
            .fold(
                None,
                |best: Option<(&GaussianComponent, &DegreeLabel)>, cur| match best {
                    Some(b) if b.0.weight >= cur.0.weight => Some(b),
                    _ => Some(cur),
                },
            )
    }
}

/// Model selection, merging, scoring and labeling for one histogram.
pub fn estimate_scale(
    hist: &PitchHistogram,
    tuning: &KnownTuning,
    config: &ScaleConfig,
) -> Result<ScaleEstimate, ScaleError> {
    let model = select_model(hist, &config.fit)?;
    let merged = merge_components(&model.components, config.merge_radius_cents);
    let mut estimate = ScaleEstimate::from_components(merged, tuning)?;
    estimate.selected_k = model.k;
    estimate.bic = model.bic;
    Ok(estimate)
}
