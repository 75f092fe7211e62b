//! One-dimensional Gaussian mixtures fitted to pitch histograms.
//!
//! EM runs on bin centers weighted by bin counts, which is equivalent to
//! fitting the quantized frames directly. The number of components is chosen
//! by BIC over a range of `k`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PitchHistogram;

/// Free parameters per component (mean, std, weight).
pub const PARAMS_PER_COMPONENT: usize = 3;
/// Minimum distance between initial means picked from histogram peaks.
pub const INIT_PEAK_SPACING_CENTS: f64 = 60.0;
pub const INIT_STD_CENTS: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("cannot fit {k} components to {occupied} occupied bins")]
    InfeasibleK { k: usize, occupied: usize },
    #[error("log-likelihood became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("invalid fit configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean_cents: f64,
    pub std_cents: f64,
    pub weight: f64,
}

impl GaussianComponent {
    pub fn new(mean_cents: f64, std_cents: f64, weight: f64) -> Self {
        GaussianComponent {
            mean_cents,
            std_cents,
            weight,
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean_cents) / self.std_cents;
        -0.5 * z * z - self.std_cents.ln() - 0.5 * (2.0 * PI).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub max_iters: usize,
    /// Stop once `|ΔlogL| / |logL|` drops below this.
    pub rel_tol: f64,
    pub variance_floor_cents: f64,
    /// Components lighter than this are dropped after convergence.
    pub min_weight: f64,
    /// Only consulted when there are fewer histogram peaks than components.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            k_min: 2,
            k_max: 14,
            max_iters: 200,
            rel_tol: 1e-6,
            variance_floor_cents: 10.0,
            min_weight: 0.01,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |msg: String| Err(FitError::Config(msg));
        if self.k_min == 0 {
            return bad("k_min must be at least 1".into());
        }
        if self.k_min > self.k_max {
            return bad(format!("k_min {} exceeds k_max {}", self.k_min, self.k_max));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.rel_tol > 0.0) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.variance_floor_cents > 0.0) {
            return bad(format!(
                "variance floor must be positive, got {}",
                self.variance_floor_cents
            ));
        }
        if !(0.0..1.0).contains(&self.min_weight) {
            return bad(format!("min_weight must lie in [0, 1), got {}", self.min_weight));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    /// Sorted by mean.
    pub components: Vec<GaussianComponent>,
    /// Log-likelihood of the final (pruned) model.
    pub log_likelihood: f64,
    pub n_samples: u64,
    /// Number of components after pruning.
    pub k: usize,
    /// Number of components EM was started with.
    pub requested_k: usize,
    pub bic: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood before the first and after every EM iteration.
    #[serde(skip)]
    pub ll_history: Vec<f64>,
}

impl MixtureModel {
    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

pub fn bic(log_likelihood: f64, k: usize, n_samples: u64) -> f64 {
    (k * PARAMS_PER_COMPONENT) as f64 * (n_samples as f64).ln() - 2.0 * log_likelihood
}

/// Weighted points (bin center, count) of the occupied bins.
struct Points {
    x: Vec<f64>,
    w: Vec<f64>,
    total: f64,
}

impl Points {
    fn from_histogram(hist: &PitchHistogram) -> Self {
        let occ = hist.occupied();
        let x: Vec<f64> = occ.iter().map(|&(c, _)| c).collect();
        let w: Vec<f64> = occ.iter().map(|&(_, n)| n as f64).collect();
        let total = w.iter().sum();
        Points { x, w, total }
    }

    fn len(&self) -> usize {
        self.x.len()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Weighted log-likelihood; fills `resp` (row-major, point × component) when given.
fn e_step(points: &Points, comps: &[GaussianComponent], mut resp: Option<&mut [f64]>) -> f64 {
    let k = comps.len();
    let mut scratch = vec![0.0; k];
    let mut ll = 0.0;
    for (i, (&x, &w)) in points.x.iter().zip(&points.w).enumerate() {
        for (s, c) in scratch.iter_mut().zip(comps) {
            *s = c.weight.ln() + c.ln_pdf(x);
        }
        let lse = log_sum_exp(&scratch);
        ll += w * lse;
        if let Some(r) = resp.as_deref_mut() {
            for j in 0..k {
                r[i * k + j] = (scratch[j] - lse).exp();
            }
        }
    }
    ll
}

fn m_step(points: &Points, resp: &[f64], comps: &mut [GaussianComponent], floor: f64) {
    let k = comps.len();
    for (j, comp) in comps.iter_mut().enumerate() {
        let mut mass = 0.0;
        let mut sum_x = 0.0;
        for (i, (&x, &w)) in points.x.iter().zip(&points.w).enumerate() {
            let r = w * resp[i * k + j];
            mass += r;
            sum_x += r * x;
        }
        if mass <= 0.0 || !mass.is_finite() {
            // responsibility underflowed everywhere: the component is dead
            comp.weight = 0.0;
            continue;
        }
        let mean = sum_x / mass;
        let mut sum_sq = 0.0;
        for (i, (&x, &w)) in points.x.iter().zip(&points.w).enumerate() {
            let d = x - mean;
            sum_sq += w * resp[i * k + j] * d * d;
        }
        comp.mean_cents = mean;
        comp.std_cents = (sum_sq / mass).sqrt().max(floor);
        comp.weight = mass / points.total;
    }
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in comps.iter_mut() {
        c.weight /= total;
    }
}

/// Initial means: highest-count bins, greedily, at least
/// [`INIT_PEAK_SPACING_CENTS`] apart (ties go to the lower bin). Missing means
/// are drawn uniformly over the occupied span.
pub fn initial_means(hist: &PitchHistogram, k: usize, seed: u64) -> Vec<f64> {
    let mut occ = hist.occupied();
    occ.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut means: Vec<f64> = Vec::with_capacity(k);
    for &(center, _) in &occ {
        if means.len() == k {
            break;
        }
        if means.iter().all(|m| (m - center).abs() >= INIT_PEAK_SPACING_CENTS) {
            means.push(center);
        }
    }
    if means.len() < k && !occ.is_empty() {
        let lo = occ.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
        let hi = occ.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        while means.len() < k {
            let u: f64 = rng.random();
            means.push(lo + u * (hi - lo));
        }
    }
    means
}

/// Fits a `k`-component mixture by EM.
pub fn fit_em(hist: &PitchHistogram, k: usize, config: &FitConfig) -> Result<MixtureModel, FitError> {
    config.validate()?;
    let points = Points::from_histogram(hist);
    if points.len() == 0 {
        return Err(FitError::EmptyHistogram);
    }
    if k == 0 || k > points.len() {
        return Err(FitError::InfeasibleK {
            k,
            occupied: points.len(),
        });
    }
    let floor = config.variance_floor_cents;
    let mut comps: Vec<GaussianComponent> = initial_means(hist, k, config.seed)
        .into_iter()
        .map(|m| GaussianComponent::new(m, INIT_STD_CENTS.max(floor), 1.0 / k as f64))
        .collect();

    let mut resp = vec![0.0; points.len() * k];
    let mut ll = e_step(&points, &comps, Some(&mut resp));
    if !ll.is_finite() {
        return Err(FitError::Diverged { iteration: 0 });
    }
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        m_step(&points, &resp, &mut comps, floor);
        iterations += 1;
        let next = e_step(&points, &comps, Some(&mut resp));
        if !next.is_finite() {
            return Err(FitError::Diverged { iteration: iterations });
        }
        history.push(next);
        let delta = (next - ll).abs();
        ll = next;
        if delta <= config.rel_tol * ll.abs() {
            converged = true;
            break;
        }
    }

    comps = prune(comps, config.min_weight);
    comps.sort_by(|a, b| a.mean_cents.total_cmp(&b.mean_cents));
    let final_ll = e_step(&points, &comps, None);
    if !final_ll.is_finite() {
        return Err(FitError::Diverged { iteration: iterations });
    }
    let n_samples = hist.total();
    Ok(MixtureModel {
        k: comps.len(),
        requested_k: k,
        bic: bic(final_ll, comps.len(), n_samples),
        log_likelihood: final_ll,
        n_samples,
        components: comps,
        iterations,
        converged,
        ll_history: history,
    })
}

/// Drops components lighter than `min_weight` (keeping at least the heaviest)
/// and renormalizes the rest.
fn prune(comps: Vec<GaussianComponent>, min_weight: f64) -> Vec<GaussianComponent> {
    let heaviest = comps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.weight.total_cmp(&b.1.weight).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);
    let mut kept: Vec<GaussianComponent> = comps
        .iter()
        .enumerate()
        .filter(|(i, c)| c.weight >= min_weight && c.weight > 0.0 || Some(*i) == heaviest)
        .map(|(_, c)| *c)
        .collect();
    let total: f64 = kept.iter().map(|c| c.weight).sum();
    for c in &mut kept {
        c.weight /= total;
    }
    kept
}

/// Candidate `k` values for a histogram: `k_min..=k_max`, capped at the number
/// of occupied bins. When even `k_min` is infeasible only that cap is tried.
pub fn candidate_ks(hist: &PitchHistogram, config: &FitConfig) -> std::ops::RangeInclusive<usize> {
    let occupied = hist.non_empty_bins();
    let hi = config.k_max.min(occupied);
    let lo = config.k_min.min(hi);
    lo..=hi
}

/// One fit attempt per candidate k, in ascending k.
pub type CandidateFits = Vec<(usize, Result<MixtureModel, FitError>)>;

/// Fits every candidate `k` and reports each outcome, in ascending `k`.
pub fn fit_candidates(hist: &PitchHistogram, config: &FitConfig) -> Result<CandidateFits, FitError> {
    config.validate()?;
    if hist.non_empty_bins() == 0 {
        return Err(FitError::EmptyHistogram);
    }
    Ok(candidate_ks(hist, config)
        .map(|k| (k, fit_em(hist, k, config)))
        .collect())
}

/// Fits every candidate `k` and returns the model with the lowest BIC; ties go
/// to the smaller `k`.
pub fn select_model(hist: &PitchHistogram, config: &FitConfig) -> Result<MixtureModel, FitError> {
    let mut best: Option<MixtureModel> = None;
    let mut last_err = None;
    for (_, fit) in fit_candidates(hist, config)? {
        match fit {
            Ok(model) => {
                if best.as_ref().is_none_or(|b| model.bic < b.bic) {
                    best = Some(model);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(FitError::EmptyHistogram))
}
