//! Dynamic time warping on squared-difference cost cells.
//!
//! `DTW(a, b) = sqrt(min_R Σ (a_i - b_j)^2)` over monotone paths from the
//! first pair of samples to the last with steps (0,1), (1,0), (1,1).
//! Distances are computed with two rolling rows over the shorter series;
//! the full matrix is only built by [`dtw_path`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Trial, DIMENSIONS};

/// Per-dimension DTW distances, in channel order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceVector(pub [f64; DIMENSIONS]);

impl DistanceVector {
    pub fn zeros() -> Self {
        Self([0.0; DIMENSIONS])
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn as_array(&self) -> &[f64; DIMENSIONS] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        match self.0.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            Some(k) => Err(Error::domain(format!(
                "distance component {} is {} (must be finite and >= 0)",
                k + 1,
                self.0[k]
            ))),
            None => Ok(()),
        }
    }
}

/// Optional Sakoe-Chiba band. `None` is exact unconstrained DTW.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DtwOptions {
    pub band: Option<usize>,
}

fn check_series(name: &str, s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::domain(format!("series {name} is empty")));
    }
    if let Some(i) = s.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("series {name} has non-finite value at {i}")));
    }
    Ok(())
}

pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    dtw_distance_with(a, b, DtwOptions::default())
}

/// DTW with an optional band of half-width `band` around the rescaled
/// diagonal. With a band too narrow to connect the corners, the result is
/// `+inf`.
pub fn dtw_distance_with(a: &[f64], b: &[f64], options: DtwOptions) -> Result<f64> {
    check_series("a", a)?;
    check_series("b", b)?;
    // Rows run over the longer series, columns over the shorter.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let m = long.len();
    let n = short.len();

    let mut prev = vec![f64::INFINITY; n];
    let mut curr = vec![f64::INFINITY; n];

    if options.band.is_none() {
        let mut acc = 0.0;
        for (slot, &s) in prev.iter_mut().zip(short) {
            acc += (long[0] - s) * (long[0] - s);
            *slot = acc;
        }
        for &li in &long[1..] {
            let mut left = prev[0] + (li - short[0]) * (li - short[0]);
            curr[0] = left;
            for ((c, w), &s) in curr[1..].iter_mut().zip(prev.windows(2)).zip(&short[1..]) {
                let d = li - s;
                left = fmin(fmin(w[0], w[1]), left) + d * d;
                *c = left;
            }
            std::mem::swap(&mut prev, &mut curr);
        }
        return Ok(prev[n - 1].sqrt());
    }

    for (i, &li) in long.iter().enumerate() {
        let (lo, hi) = column_range(i, m, n, options.band);
        curr.iter_mut().for_each(|c| *c = f64::INFINITY);
        for j in lo..hi {
            let d = li - short[j];
            let cost = d * d;
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { curr[j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[n - 1].sqrt())
}

// Costs are never NaN, so the plain comparison is enough and avoids the
// NaN handling of `f64::min` in the hot loop.
#[inline(always)]
fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

fn column_range(i: usize, m: usize, n: usize, band: Option<usize>) -> (usize, usize) {
    match band {
        None => (0, n),
        Some(w) => {
            let centre = if m > 1 {
                (i as f64 * (n - 1) as f64 / (m - 1) as f64).round() as usize
            } else {
                0
            };
            (centre.saturating_sub(w), (centre + w + 1).min(n))
        }
    }
}

/// Distance plus one optimal warping path (0-based index pairs into `a`, `b`).
/// Builds the full `|a|·|b|` matrix.
pub fn dtw_path(a: &[f64], b: &[f64]) -> Result<(f64, Vec<(usize, usize)>)> {
    check_series("a", a)?;
    check_series("b", b)?;
    let (m, n) = (a.len(), b.len());
    let mut acc = vec![f64::INFINITY; m * n];
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..m {
        for j in 0..n {
            let d = a[i] - b[j];
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = d * d + best;
        }
    }

    let mut path = vec![(m - 1, n - 1)];
    let (mut i, mut j) = (m - 1, n - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    Ok((acc[at(m - 1, n - 1)].sqrt(), path))
}

/// Component `k` is the DTW distance between channel `k` of each trial.
pub fn dtw_vector(ta: &Trial, tb: &Trial) -> Result<DistanceVector> {
    let ca = ta.channels();
    let cb = tb.channels();
    let mut d = [0.0; DIMENSIONS];
    for k in 0..DIMENSIONS {
        d[k] = dtw_distance(&ca[k], &cb[k])?;
    }
    Ok(DistanceVector(d))
}
