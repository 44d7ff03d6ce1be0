//! Similarity scoring and accept/deny decisions.
//!
//! Per dimension the similarity is `min(e/s, 1)`: a probe at least as close to
//! the group as the group's own ideal distance scores 1, and the score decays
//! with the ratio beyond that. The total similarity score (TSS) is the
//! `μ`-weighted sum; a probe is accepted when `TSS >= δ`.

use serde::{Deserialize, Serialize};

use crate::dsp::filter_trial_with;
use crate::dtw::DistanceVector;
use crate::error::{Error, Result};
use crate::eval::auc;
use crate::profile::{distance_to_group, DimensionWeights, Profile, WEIGHT_SUM_TOLERANCE};
use crate::signal::{Trial, DIMENSIONS};

/// Hardened threshold for deployments facing mimicry.
pub const HARDENED_THRESHOLD: f64 = 0.65;
/// Threshold used together with AUC-calibrated weights.
pub const BALANCED_THRESHOLD: f64 = 0.62;

/// Per-dimension AUC a dimension has to beat before it receives weight.
pub const AUC_FLOOR: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub tss: f64,
    pub ss: [f64; DIMENSIONS],
    pub threshold: f64,
    pub decision: Decision,
}

impl ScoreReport {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

pub fn similarity_scores(e: &DistanceVector, s: &DistanceVector) -> Result<[f64; DIMENSIONS]> {
    for (name, v) in [("ideal", e), ("group", s)] {
        if let Some(k) = v.0.iter().position(|d| !(*d >= 0.0)) {
            return Err(Error::domain(format!(
                "{name} distance component {} is {} (must be >= 0)",
                k + 1,
                v.0[k]
            )));
        }
    }
    Ok(std::array::from_fn(|k| {
        let (ek, sk) = (e.0[k], s.0[k]);
        if sk == 0.0 {
            1.0
        } else {
            (ek / sk).min(1.0)
        }
    }))
}

/// `Σ μ_k ss_k`, evaluated as `1 - Σ μ_k (1 - ss_k)` so that a full score on
/// every weighted dimension gives exactly 1.
pub fn total_similarity(ss: &[f64; DIMENSIONS], mu: &[f64; DIMENSIONS]) -> Result<f64> {
    if mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::domain(format!("weights {mu:?} must be finite and >= 0")));
    }
    let sum: f64 = mu.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::domain(format!("weights sum to {sum}, expected 1")));
    }
    if ss.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::domain(format!("similarity scores {ss:?} must lie in [0, 1]")));
    }
    let deficit: f64 = ss.iter().zip(mu).map(|(s, m)| m * (1.0 - s)).sum();
    Ok((1.0 - deficit).clamp(0.0, 1.0))
}

pub fn decide(tss: f64, threshold: f64) -> Decision {
    if tss >= threshold {
        Decision::Accept
    } else {
        Decision::Deny
    }
}

/// Scores a probe's group distance against the ideal distance.
pub fn score_distances(
    e: &DistanceVector,
    s: &DistanceVector,
    weights: &DimensionWeights,
    threshold: f64,
) -> Result<ScoreReport> {
    let ss = similarity_scores(e, s)?;
    let tss = total_similarity(&ss, weights.as_array())?;
    Ok(ScoreReport {
        tss,
        ss,
        threshold,
        decision: decide(tss, threshold),
    })
}

/// Filters a raw probe with the profile's filter and scores it.
pub fn authenticate(probe: &Trial, profile: &Profile) -> Result<ScoreReport> {
    let filtered = filter_trial_with(probe, profile.filter())?;
    let s = distance_to_group(&filtered, profile)?;
    score_distances(profile.ideal(), &s, profile.weights(), profile.threshold())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub auc: [f64; DIMENSIONS],
    pub weights: DimensionWeights,
    /// True when no dimension cleared the AUC floor and uniform weights
    /// were used instead.
    pub uniform_fallback: bool,
}

/// `B_k = max(A_k - 0.85, 0)`, `μ_k = B_k / ΣB`; uniform when `ΣB = 0`.
pub fn weights_from_auc(auc: &[f64; DIMENSIONS]) -> Calibration {
    let b = auc.map(|a| (a - AUC_FLOOR).max(0.0));
    let total: f64 = b.iter().sum();
    let (weights, uniform_fallback) = if total > 0.0 {
        (
            DimensionWeights::normalized(b).expect("positive weight sum"),
            false,
        )
    } else {
        (DimensionWeights::uniform(), true)
    };
    Calibration {
        auc: *auc,
        weights,
        uniform_fallback,
    }
}

/// Per-dimension AUC of genuine vs impostor similarity scores, turned into
/// weights.
pub fn calibrate_weights(genuine: &[Vec<f64>], impostor: &[Vec<f64>]) -> Result<Calibration> {
    if genuine.len() != DIMENSIONS || impostor.len() != DIMENSIONS {
        return Err(Error::domain("calibration needs score sets for all 6 dimensions"));
    }
    let mut a = [0.0; DIMENSIONS];
    for (k, slot) in a.iter_mut().enumerate() {
        *slot = auc(&genuine[k], &impostor[k])?;
    }
    Ok(weights_from_auc(&a))
}

/// Header of a similarity-score CSV file.
pub const SCORE_HEADER: &str = "ss_ax,ss_ay,ss_az,ss_gx,ss_gy,ss_gz";

/// Parses a score CSV: [`SCORE_HEADER`], then one row of six scores in
/// `[0, 1]` per probe. Blank lines and `#` comments are skipped.
pub fn parse_scores(text: &str) -> Result<Vec<[f64; DIMENSIONS]>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == SCORE_HEADER => {}
        Some((n, _)) => return Err(Error::parse(n, format!("expected header {SCORE_HEADER:?}"))),
        None => return Err(Error::parse(1, "empty score file")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != DIMENSIONS {
            return Err(Error::parse(n, format!("expected 6 fields, found {}", fields.len())));
        }
        let mut row = [0.0; DIMENSIONS];
        for (slot, f) in row.iter_mut().zip(&fields) {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::parse(n, format!("bad number {f:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(n, format!("score {v} outside [0, 1]")));
            }
            *slot = v;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_scores(rows: &[[f64; DIMENSIONS]]) -> String {
    let mut out = format!("{SCORE_HEADER}\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Transposes per-probe score rows into per-dimension columns.
pub fn columns(rows: &[[f64; DIMENSIONS]]) -> Vec<Vec<f64>> {
    (0..DIMENSIONS)
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect()
}
