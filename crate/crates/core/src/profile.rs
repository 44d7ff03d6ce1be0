//! Enrollment templates.
//!
//! A profile keeps the filtered enrollment trials together with the group's
//! ideal distance `e` (per-dimension upper quartile of all pairwise DTW
//! distances) and Poisson rank weights `ρ`. A probe's distance to the group
//! is, per dimension, the `ρ`-weighted sum of its sorted distances to the
//! enrollment trials, so the closest trials dominate.
//!
//! # File layout
//!
//! Profiles are TOML documents:
//!
//! ```toml
//! format = "wristsign-profile"
//! version = 1
//! n = 5
//! threshold = 0.55
//! ideal = [e1, e2, e3, e4, e5, e6]
//! weights = [mu1, mu2, mu3, mu4, mu5, mu6]
//! rank_weights = [rho1, ..., rho_n]
//!
//! [filter]
//! window = 9
//! degree = 2
//!
//! [[trials]]
//! samples = """
//! # user=...
//! t,ax,ay,az,gx,gy,gz
//! ...
//! """
//! ```
//!
//! Each `samples` string is a filtered trial in the CSV trial format. Floats
//! are written in shortest round-trip form, so load/store is exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{filter_trial_with, SgConfig};
use crate::dtw::{dtw_distance, DistanceVector};
use crate::error::{Error, Result};
use crate::signal::{parse_trial, write_trial, Trial, TrialFormat, DIMENSIONS};

pub const PROFILE_FORMAT: &str = "wristsign-profile";
pub const PROFILE_VERSION: u32 = 1;

/// Default decision threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.55;

/// Non-negative per-dimension weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DimensionWeights([f64; DIMENSIONS]);

/// Accepted deviation of a weight sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl DimensionWeights {
    pub fn uniform() -> Self {
        Self([1.0 / DIMENSIONS as f64; DIMENSIONS])
    }

    pub fn new(weights: [f64; DIMENSIONS]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain(format!("weights {weights:?} must be finite and >= 0")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::domain(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self(weights))
    }

    /// Scales arbitrary non-negative weights to unit sum.
    pub fn normalized(raw: [f64; DIMENSIONS]) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || raw.iter().any(|w| *w < 0.0) {
            return Err(Error::domain(format!("cannot normalise weights {raw:?}")));
        }
        Self::new(raw.map(|w| w / sum))
    }

    pub fn as_array(&self) -> &[f64; DIMENSIONS] {
        &self.0
    }
}

impl Default for DimensionWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl TryFrom<Vec<f64>> for DimensionWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let arr: [f64; DIMENSIONS] = v
            .try_into()
            .map_err(|v: Vec<f64>| Error::domain(format!("expected 6 weights, got {}", v.len())))?;
        Self::new(arr)
    }
}

impl From<DimensionWeights> for Vec<f64> {
    fn from(w: DimensionWeights) -> Self {
        w.0.to_vec()
    }
}

/// All unordered-pair DTW distances of an enrollment group, per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseDistances {
    n: usize,
    per_dim: [Vec<f64>; DIMENSIONS],
}

impl PairwiseDistances {
    pub fn group_size(&self) -> usize {
        self.n
    }

    /// Distances for a 0-based dimension, in pair order (0,1), (0,2), ...
    pub fn dimension(&self, k: usize) -> &[f64] {
        &self.per_dim[k]
    }
}

pub fn pairwise_distances(trials: &[Trial]) -> Result<PairwiseDistances> {
    let n = trials.len();
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 trials, got {n}")));
    }
    let channels: Vec<_> = trials.iter().map(Trial::channels).collect();
    let pairs = n * (n - 1) / 2;
    let mut per_dim: [Vec<f64>; DIMENSIONS] = std::array::from_fn(|_| Vec::with_capacity(pairs));
    for i in 0..n {
        for j in i + 1..n {
            for (k, dim) in per_dim.iter_mut().enumerate() {
                dim.push(dtw_distance(&channels[i][k], &channels[j][k])?);
            }
        }
    }
    Ok(PairwiseDistances { n, per_dim })
}

/// Nearest-rank upper quartile: the `⌈0.75·m⌉`-th smallest value.
pub fn upper_quartile(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("upper quartile of an empty set"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (3 * sorted.len()).div_ceil(4);
    Ok(sorted[rank - 1])
}

pub fn ideal_distance(pd: &PairwiseDistances) -> Result<DistanceVector> {
    let mut e = [0.0; DIMENSIONS];
    for (k, slot) in e.iter_mut().enumerate() {
        *slot = upper_quartile(&pd.per_dim[k])?;
    }
    Ok(DistanceVector(e))
}

/// Poisson pmf over ranks `1..=n` with `λ = max(1, ⌊n/5⌋)`, normalised.
pub fn poisson_rank_weights(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain(format!("rank weights need n >= 2, got {n}")));
    }
    let lambda = (n / 5).max(1) as f64;
    let mut beta = Vec::with_capacity(n);
    let mut term = lambda * (-lambda).exp();
    for i in 1..=n {
        beta.push(term);
        term *= lambda / (i + 1) as f64;
    }
    let total: f64 = beta.iter().sum();
    Ok(beta.into_iter().map(|b| b / total).collect())
}

/// `Σ ρ_i · t̂_i` with `t̂` the distances sorted ascending.
pub fn rank_weighted_distance(distances: &[f64], rho: &[f64]) -> Result<f64> {
    if distances.len() != rho.len() {
        return Err(Error::domain(format!(
            "{} distances but {} rank weights",
            distances.len(),
            rho.len()
        )));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted.iter().zip(rho).map(|(t, r)| t * r).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    trials: Vec<Trial>,
    ideal: DistanceVector,
    weights: DimensionWeights,
    threshold: f64,
    rank_weights: Vec<f64>,
    filter: SgConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub weights: DimensionWeights,
    pub threshold: f64,
    pub filter: SgConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            weights: DimensionWeights::uniform(),
            threshold: DEFAULT_THRESHOLD,
            filter: SgConfig::default(),
        }
    }
}

pub fn check_threshold(threshold: f64) -> Result<f64> {
    if threshold.is_finite() && threshold > 0.0 && threshold <= 1.0 {
        Ok(threshold)
    } else {
        Err(Error::domain(format!("threshold {threshold} must lie in (0, 1]")))
    }
}

/// Filters the raw trials and builds the group template.
pub fn train(trials: &[Trial], options: TrainOptions) -> Result<Profile> {
    if trials.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 enrollment trials, got {}",
            trials.len()
        )));
    }
    check_threshold(options.threshold)?;
    let filtered = trials
        .iter()
        .map(|t| filter_trial_with(t, options.filter))
        .collect::<Result<Vec<_>>>()?;
    let pd = pairwise_distances(&filtered)?;
    Ok(Profile {
        ideal: ideal_distance(&pd)?,
        rank_weights: poisson_rank_weights(filtered.len())?,
        trials: filtered,
        weights: options.weights,
        threshold: options.threshold,
        filter: options.filter,
    })
}

/// Distance of an already filtered probe to the enrollment group.
pub fn distance_to_group(probe: &Trial, profile: &Profile) -> Result<DistanceVector> {
    let probe_channels = probe.channels();
    let template_channels: Vec<_> = profile.trials.iter().map(Trial::channels).collect();
    let mut s = [0.0; DIMENSIONS];
    let mut column = vec![0.0; profile.trials.len()];
    for (k, slot) in s.iter_mut().enumerate() {
        for (t, template) in column.iter_mut().zip(&template_channels) {
            *t = dtw_distance(&probe_channels[k], &template[k])?;
        }
        *slot = rank_weighted_distance(&column, &profile.rank_weights)?;
    }
    Ok(DistanceVector(s))
}

impl Profile {
    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn group_size(&self) -> usize {
        self.trials.len()
    }

    pub fn ideal(&self) -> &DistanceVector {
        &self.ideal
    }

    pub fn weights(&self) -> &DimensionWeights {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rank_weights(&self) -> &[f64] {
        &self.rank_weights
    }

    pub fn filter(&self) -> SgConfig {
        self.filter
    }

    pub fn with_weights(mut self, weights: DimensionWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = check_threshold(threshold)?;
        Ok(self)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let doc = ProfileDoc {
            format: PROFILE_FORMAT.to_owned(),
            version: PROFILE_VERSION,
            n: self.trials.len(),
            threshold: self.threshold,
            ideal: self.ideal.0.to_vec(),
            weights: self.weights,
            rank_weights: self.rank_weights.clone(),
            filter: self.filter,
            trials: self
                .trials
                .iter()
                .map(|t| TrialDoc {
                    samples: write_trial(t, TrialFormat::Csv),
                })
                .collect(),
        };
        Ok(toml::to_string(&doc)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ProfileDoc = toml::from_str(text)?;
        if doc.format != PROFILE_FORMAT {
            return Err(Error::Format(format!("format tag {:?} is not {PROFILE_FORMAT:?}", doc.format)));
        }
        if doc.version != PROFILE_VERSION {
            return Err(Error::Format(format!("unsupported profile version {}", doc.version)));
        }
        if doc.n < 2 || doc.n != doc.trials.len() {
            return Err(Error::Format(format!(
                "n = {} but {} trials stored",
                doc.n,
                doc.trials.len()
            )));
        }
        check_threshold(doc.threshold).map_err(|e| Error::Format(e.to_string()))?;
        doc.filter.validate().map_err(|e| Error::Format(e.to_string()))?;
        let ideal: [f64; DIMENSIONS] = doc
            .ideal
            .try_into()
            .map_err(|_| Error::Format("ideal must hold 6 values".into()))?;
        let ideal = DistanceVector(ideal);
        ideal.validate().map_err(|e| Error::Format(e.to_string()))?;
        if doc.rank_weights.len() != doc.n
            || doc.rank_weights.iter().any(|r| !(r.is_finite() && *r >= 0.0))
            || (doc.rank_weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SUM_TOLERANCE
        {
            return Err(Error::Format(
                "rank_weights must be n non-negative values summing to 1".into(),
            ));
        }
        let trials = doc
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| {
                parse_trial(t.samples.as_bytes(), TrialFormat::Csv)
                    .map_err(|e| Error::Format(format!("trial {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Profile {
            trials,
            ideal,
            weights: doc.weights,
            threshold: doc.threshold,
            rank_weights: doc.rank_weights,
            filter: doc.filter,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    format: String,
    version: u32,
    n: usize,
    threshold: f64,
    ideal: Vec<f64>,
    weights: DimensionWeights,
    rank_weights: Vec<f64>,
    filter: SgConfig,
    trials: Vec<TrialDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialDoc {
    samples: String,
}
