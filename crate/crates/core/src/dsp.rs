//! Savitzky-Golay smoothing.
//!
//! Interior points are convolved with the least-squares polynomial smoother
//! of the configured window. Points closer than half a window to either end
//! use the largest centred window that fits (`2·min(i, n-1-i) + 1`), with the
//! polynomial degree capped at `window - 1`. The two end points therefore
//! pass through unchanged.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Channel, Trial};

pub const DEFAULT_WINDOW: usize = 9;
pub const DEFAULT_DEGREE: usize = 2;

/// Smoothing weights for one (window, degree) pair, evaluated at the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct SgKernel {
    window: usize,
    degree: usize,
    weights: Vec<f64>,
}

impl SgKernel {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Filter parameters, stored in profiles so probes get the same treatment as
/// the enrollment trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SgConfig {
    pub window: usize,
    pub degree: usize,
}

impl Default for SgConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            degree: DEFAULT_DEGREE,
        }
    }
}

impl SgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::domain(format!(
                "filter window {} must be odd and at least 3",
                self.window
            )));
        }
        if self.degree >= self.window {
            return Err(Error::domain(format!(
                "filter degree {} must be below the window {}",
                self.degree, self.window
            )));
        }
        Ok(())
    }
}

/// Least-squares smoothing coefficients for an odd `window >= 3` and
/// `degree < window`.
pub fn sg_coefficients(window: usize, degree: usize) -> Result<SgKernel> {
    SgConfig { window, degree }.validate()?;
    Ok((*cached_kernel(window, degree)).clone())
}

fn cached_kernel(window: usize, degree: usize) -> Arc<SgKernel> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<SgKernel>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(k) = cache.read().expect("kernel cache poisoned").get(&(window, degree)) {
        return Arc::clone(k);
    }
    let kernel = Arc::new(compute_kernel(window, degree));
    cache
        .write()
        .expect("kernel cache poisoned")
        .entry((window, degree))
        .or_insert(kernel)
        .clone()
}

/// Solves the local polynomial fit on abscissae `-h..=h` through an
/// orthonormal basis of the monomials up to `degree` (modified Gram-Schmidt,
/// applied twice). The centre smoother is then `w_i = Σ_k q_k(0) q_k(x_i)`.
/// Window 1 is accepted here for the edge treatment.
fn compute_kernel(window: usize, degree: usize) -> SgKernel {
    debug_assert!(window % 2 == 1 && degree < window);
    let half = (window / 2) as f64;
    let xs: Vec<f64> = (0..window).map(|i| i as f64 - half).collect();
    let centre = window / 2;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    for power in 0..=degree {
        // Scaled abscissae keep the monomial columns O(1).
        let mut v: Vec<f64> = xs
            .iter()
            .map(|&x| if half > 0.0 { (x / half).powi(power as i32) } else { 1.0 })
            .collect();
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }

    let mut weights: Vec<f64> = (0..window)
        .map(|i| basis.iter().map(|q| q[centre] * q[i]).sum())
        .collect();
    // The fit on a symmetric grid is symmetric; average out rounding.
    for i in 0..centre {
        let m = 0.5 * (weights[i] + weights[window - 1 - i]);
        weights[i] = m;
        weights[window - 1 - i] = m;
    }
    SgKernel {
        window,
        degree,
        weights,
    }
}

/// Smooths one channel with the centred shrinking-window edge policy.
pub fn sg_smooth(channel: &Channel, window: usize, degree: usize) -> Result<Channel> {
    SgConfig { window, degree }.validate()?;
    smooth_values(channel.values(), window, degree).map(Channel::new)
}

fn smooth_values(x: &[f64], window: usize, degree: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n < window {
        return Err(Error::TooShort { len: n, min: window });
    }
    let half = window / 2;
    let full = cached_kernel(window, degree);
    let mut out = vec![0.0; n];

    for (i, slot) in out.iter_mut().enumerate() {
        let h = half.min(i).min(n - 1 - i);
        let kernel = if h == half {
            Arc::clone(&full)
        } else {
            let w = 2 * h + 1;
            cached_kernel(w, degree.min(w - 1))
        };
        *slot = kernel
            .weights
            .iter()
            .zip(&x[i - h..=i + h])
            .map(|(w, v)| w * v)
            .sum();
    }
    Ok(out)
}

/// Smooths all six channels with the default window 9, degree 2.
pub fn filter_trial(trial: &Trial) -> Result<Trial> {
    filter_trial_with(trial, SgConfig::default())
}

pub fn filter_trial_with(trial: &Trial, config: SgConfig) -> Result<Trial> {
    config.validate()?;
    let channels = trial.channels();
    let mut smoothed: [Vec<f64>; 6] = Default::default();
    for (k, c) in channels.iter().enumerate() {
        smoothed[k] = smooth_values(c, config.window, config.degree)?;
    }
    trial.replace_channels(smoothed)
}
