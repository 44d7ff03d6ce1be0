//! Metrics and experiment harnesses.
//!
//! Acceptance is inclusive everywhere (`score >= δ`), matching
//! [`crate::auth::decide`], so rates computed here agree with the
//! authenticator at boundary scores.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::auth::{authenticate, columns, ScoreReport};
use crate::error::{Error, Result};
use crate::profile::{train, Profile, TrainOptions};
use crate::signal::{Trial, DIMENSIONS};

fn check_nonempty(genuine: &[f64], impostor: &[f64]) -> Result<()> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::domain("genuine and impostor score sets must be non-empty"));
    }
    if genuine.iter().chain(impostor).any(|s| s.is_nan()) {
        return Err(Error::domain("scores must not be NaN"));
    }
    Ok(())
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mann-Whitney AUC: the fraction of (genuine, impostor) pairs with the
/// genuine score higher, ties counting one half.
pub fn auc(genuine: &[f64], impostor: &[f64]) -> Result<f64> {
    check_nonempty(genuine, impostor)?;
    let imp = sorted(impostor);
    // Twice the U statistic, kept integral so the division is the only rounding.
    let mut twice_u: u64 = 0;
    for &g in genuine {
        let below = imp.partition_point(|&i| i < g);
        let not_above = imp.partition_point(|&i| i <= g);
        twice_u += 2 * below as u64 + (not_above - below) as u64;
    }
    Ok(twice_u as f64 / (2 * genuine.len() as u64 * imp.len() as u64) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are accepted at this point.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
            .sum()
    }

    /// `fpr,tpr,threshold` CSV; the leading sentinel threshold is `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
        }
        out
    }
}

/// Sweeps the acceptance threshold from `+inf` down through every distinct
/// observed score.
pub fn roc_curve(genuine: &[f64], impostor: &[f64]) -> Result<RocCurve> {
    check_nonempty(genuine, impostor)?;
    let g = sorted(genuine);
    let i = sorted(impostor);
    let mut thresholds: Vec<f64> = g.iter().chain(&i).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let rate = |set: &[f64], t: f64| (set.len() - set.partition_point(|&s| s < t)) as f64 / set.len() as f64;
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    points.extend(thresholds.into_iter().map(|t| RocPoint {
        fpr: rate(&i, t),
        tpr: rate(&g, t),
        threshold: t,
    }));
    Ok(RocCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub fnr: f64,
    pub fpr: f64,
    pub tpr: f64,
}

pub fn rates_at(genuine: &[f64], impostor: &[f64], delta: f64) -> Result<Rates> {
    check_nonempty(genuine, impostor)?;
    let fnr = genuine.iter().filter(|&&s| s < delta).count() as f64 / genuine.len() as f64;
    let fpr = impostor.iter().filter(|&&s| s >= delta).count() as f64 / impostor.len() as f64;
    Ok(Rates {
        fnr,
        fpr,
        tpr: 1.0 - fnr,
    })
}

/// Median of a non-empty set (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("median of an empty set"));
    }
    let v = sorted(values);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]].total_cmp(&v[idx[i]]) == Ordering::Equal {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// One writer's enrollment trials plus held-out genuine probes.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTrials {
    pub id: String,
    pub enroll: Vec<Trial>,
    pub genuine: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRates {
    pub user: String,
    pub genuine_probes: usize,
    pub impostor_probes: usize,
    pub fnr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub threshold: f64,
    pub per_user: Vec<UserRates>,
    /// Means over users.
    pub fnr: f64,
    pub fpr: f64,
    pub tpr: f64,
    /// Pooled genuine-vs-impostor AUC of each dimension's similarity score.
    pub auc_per_dim: [f64; DIMENSIONS],
    /// Pooled AUC of the total similarity score.
    pub auc_total: f64,
    pub roc: RocCurve,
}

/// Genuine and impostor score reports gathered by [`discrimination`],
/// kept for calibration.
#[derive(Debug, Clone, Default)]
pub struct ScoreSets {
    pub genuine: Vec<ScoreReport>,
    pub impostor: Vec<ScoreReport>,
}

impl ScoreSets {
    pub fn genuine_tss(&self) -> Vec<f64> {
        self.genuine.iter().map(|r| r.tss).collect()
    }

    pub fn impostor_tss(&self) -> Vec<f64> {
        self.impostor.iter().map(|r| r.tss).collect()
    }

    pub fn genuine_ss(&self) -> Vec<Vec<f64>> {
        columns(&self.genuine.iter().map(|r| r.ss).collect::<Vec<_>>())
    }

    pub fn impostor_ss(&self) -> Vec<Vec<f64>> {
        columns(&self.impostor.iter().map(|r| r.ss).collect::<Vec<_>>())
    }
}

/// Trains one profile per user; every other user's genuine probes act as
/// impostors.
pub fn discrimination(
    users: &[UserTrials],
    options: TrainOptions,
) -> Result<(DiscriminationReport, ScoreSets)> {
    if users.len() < 2 {
        return Err(Error::domain("discrimination needs at least 2 users"));
    }
    let mut per_user = Vec::with_capacity(users.len());
    let mut pooled = ScoreSets::default();
    for (u, user) in users.iter().enumerate() {
        let profile = train(&user.enroll, options)?;
        let genuine = score_all(&user.genuine, &profile)?;
        let impostor = users
            .iter()
            .enumerate()
            .filter(|&(v, _)| v != u)
            .map(|(_, other)| score_all(&other.genuine, &profile))
            .collect::<Result<Vec<_>>>()?
            .concat();
        let g: Vec<f64> = genuine.iter().map(|r| r.tss).collect();
        let i: Vec<f64> = impostor.iter().map(|r| r.tss).collect();
        let rates = rates_at(&g, &i, options.threshold)?;
        per_user.push(UserRates {
            user: user.id.clone(),
            genuine_probes: g.len(),
            impostor_probes: i.len(),
            fnr: rates.fnr,
            fpr: rates.fpr,
        });
        pooled.genuine.extend(genuine);
        pooled.impostor.extend(impostor);
    }
    let mean = |f: fn(&UserRates) -> f64| per_user.iter().map(f).sum::<f64>() / per_user.len() as f64;
    let fnr = mean(|r| r.fnr);
    let fpr = mean(|r| r.fpr);

    let (gss, iss) = (pooled.genuine_ss(), pooled.impostor_ss());
    let mut auc_per_dim = [0.0; DIMENSIONS];
    for (k, slot) in auc_per_dim.iter_mut().enumerate() {
        *slot = auc(&gss[k], &iss[k])?;
    }
    let (g, i) = (pooled.genuine_tss(), pooled.impostor_tss());
    let report = DiscriminationReport {
        threshold: options.threshold,
        fnr,
        fpr,
        tpr: 1.0 - fnr,
        per_user,
        auc_per_dim,
        auc_total: auc(&g, &i)?,
        roc: roc_curve(&g, &i)?,
    };
    Ok((report, pooled))
}

fn score_all(trials: &[Trial], profile: &Profile) -> Result<Vec<ScoreReport>> {
    trials.iter().map(|t| authenticate(t, profile)).collect()
}

/// A labelled set of attack trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub strength: Option<f64>,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub strength: Option<f64>,
    pub trials: usize,
    pub median_tss: f64,
    pub max_tss: f64,
    /// `δ - max_tss`; positive when every trial is denied.
    pub margin: f64,
    /// Fraction of trials accepted at the profile threshold.
    pub accept_rate: f64,
    /// Sorted ascending.
    pub tss: Vec<f64>,
}

pub fn attack_eval(profile: &Profile, scenarios: &[Scenario]) -> Result<Vec<ScenarioReport>> {
    if scenarios.is_empty() {
        return Err(Error::domain("no attack scenarios given"));
    }
    scenarios
        .iter()
        .map(|sc| {
            if sc.trials.is_empty() {
                return Err(Error::domain(format!("scenario {:?} has no trials", sc.name)));
            }
            let tss = sorted(
                &score_all(&sc.trials, profile)?
                    .iter()
                    .map(|r| r.tss)
                    .collect::<Vec<_>>(),
            );
            let max_tss = *tss.last().expect("non-empty");
            let accepted = tss.iter().filter(|&&t| t >= profile.threshold()).count();
            Ok(ScenarioReport {
                name: sc.name.clone(),
                strength: sc.strength,
                trials: tss.len(),
                median_tss: median(&tss)?,
                max_tss,
                margin: profile.threshold() - max_tss,
                accept_rate: accepted as f64 / tss.len() as f64,
                tss,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultPoint {
    /// Requested share of bad trials in the training group.
    pub fraction: f64,
    pub bad_in_training: usize,
    pub training_size: usize,
    /// Acceptance of genuine probes.
    pub tpr: f64,
    pub fnr: f64,
    /// Acceptance of bad probes.
    pub bad_accept_rate: f64,
}

/// Number of bad trials added to `clean` so they make up `fraction` of the
/// group: `round(f·clean / (1 - f))`.
pub fn bad_count(clean: usize, fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::domain(format!("bad fraction {fraction} outside [0, 1)")));
    }
    Ok((fraction * clean as f64 / (1.0 - fraction)).round() as usize)
}

/// Retrains on `clean` plus a growing prefix of `bad` and scores both probe
/// sets at each fraction.
pub fn fault_tolerance_sweep(
    clean: &[Trial],
    bad: &[Trial],
    test_genuine: &[Trial],
    test_bad: &[Trial],
    fractions: &[f64],
    options: TrainOptions,
) -> Result<Vec<FaultPoint>> {
    if test_genuine.is_empty() || test_bad.is_empty() {
        return Err(Error::domain("fault sweep needs genuine and bad probes"));
    }
    fractions
        .iter()
        .map(|&fraction| {
            let b = bad_count(clean.len(), fraction)?;
            if b > bad.len() {
                return Err(Error::domain(format!(
                    "fraction {fraction} needs {b} bad trials, only {} available",
                    bad.len()
                )));
            }
            let group: Vec<Trial> = clean.iter().chain(&bad[..b]).cloned().collect();
            let profile = train(&group, options)?;
            let accept_rate = |probes: &[Trial]| -> Result<f64> {
                let reports = score_all(probes, &profile)?;
                Ok(reports.iter().filter(|r| r.accepted()).count() as f64 / reports.len() as f64)
            };
            let tpr = accept_rate(test_genuine)?;
            Ok(FaultPoint {
                fraction,
                bad_in_training: b,
                training_size: group.len(),
                tpr,
                fnr: 1.0 - tpr,
                bad_accept_rate: accept_rate(test_bad)?,
            })
        })
        .collect()
}
