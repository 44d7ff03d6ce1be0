//! Closed-set contrast pipeline: hand-crafted features, regularised linear
//! regression for feature selection, and a one-vs-rest linear max-margin
//! classifier.
//!
//! The classifier has no reject option. [`open_set_flaw_demo`] puts that next
//! to the DTW authenticator on words neither of them was trained on.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::auth::authenticate;
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::signal::{Trial, CHANNEL_NAMES, DIMENSIONS};

/// Scalar features per channel, in column order.
pub const CORE_FEATURES: [&str; 9] = [
    "mean", "min", "max", "range", "variance", "kurtosis", "skewness", "energy", "entropy",
];
pub const CORE_LEN: usize = CORE_FEATURES.len() * DIMENSIONS;
pub const DIS_BINS: usize = 20;
pub const DIS_PAIRS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// `CORE_FEATURES` for ax, then for ay, ... (54 values).
    pub core: Vec<f64>,
    /// Per channel, a 20-bin histogram of random two-point differences.
    pub dis: [[f64; DIS_BINS]; DIMENSIONS],
    /// Per channel maximum absolute value.
    pub peak: [f64; DIMENSIONS],
}

impl FeatureVector {
    /// Core features only, or core + Dis + Peak (180 values).
    pub fn to_vec(&self, all: bool) -> Vec<f64> {
        let mut v = self.core.clone();
        if all {
            v.extend(self.dis.iter().flatten());
            v.extend(self.peak);
        }
        v
    }
}

/// Column names matching [`FeatureVector::to_vec`].
pub fn feature_names(all: bool) -> Vec<String> {
    let mut names: Vec<String> = CHANNEL_NAMES
        .iter()
        .flat_map(|c| CORE_FEATURES.iter().map(move |f| format!("{c}_{f}")))
        .collect();
    if all {
        for c in CHANNEL_NAMES {
            names.extend((0..DIS_BINS).map(|b| format!("{c}_dis{b:02}")));
        }
        names.extend(CHANNEL_NAMES.iter().map(|c| format!("{c}_peak")));
    }
    names
}

/// Unnormalised DFT, `X_k = Σ_n x_n e^{-2πi kn/N}`.
pub fn dft(series: &[f64]) -> Result<Vec<Complex64>> {
    if series.is_empty() {
        return Err(Error::domain("DFT of an empty series"));
    }
    let mut buf: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(buf)
}

/// `Σ |v_i|²` over the spectrum.
pub fn spectral_energy(spectrum: &[Complex64]) -> f64 {
    spectrum.iter().map(|v| v.norm_sqr()).sum()
}

/// `Σ |v_i|² ln |v_i|²`, with `0 ln 0 = 0`.
pub fn spectral_entropy(spectrum: &[Complex64]) -> f64 {
    spectrum
        .iter()
        .map(|v| {
            let p = v.norm_sqr();
            if p > 0.0 {
                p * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

fn channel_stats(x: &[f64]) -> Result<[f64; 9]> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let moment = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let m2 = moment(2);
    // Zero variance up to rounding of the mean.
    let degenerate = m2 <= 1e-24 * (1.0 + mean * mean);
    let (kurtosis, skewness) = if degenerate {
        (0.0, 0.0)
    } else {
        (moment(4) / (m2 * m2), moment(3) / m2.powf(1.5))
    };
    let spectrum = dft(x)?;
    Ok([
        mean,
        min,
        max,
        max - min,
        if degenerate { 0.0 } else { m2 },
        kurtosis,
        skewness,
        spectral_energy(&spectrum),
        spectral_entropy(&spectrum),
    ])
}

/// Features of one (already filtered) trial. The same `DIS_PAIRS` random
/// index pairs are used for every channel, drawn from `rng_seed`.
pub fn extract_features(trial: &Trial, rng_seed: u64) -> Result<FeatureVector> {
    let channels = trial.channels();
    let n = trial.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pairs: Vec<(usize, usize)> = (0..DIS_PAIRS)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();

    let mut core = Vec::with_capacity(CORE_LEN);
    let mut dis = [[0.0; DIS_BINS]; DIMENSIONS];
    let mut peak = [0.0; DIMENSIONS];
    for (k, x) in channels.iter().enumerate() {
        let stats = channel_stats(x)?;
        core.extend(stats);
        let r = stats[3];
        let mut counts = [0usize; DIS_BINS];
        for &(i, j) in &pairs {
            let d = x[i] - x[j];
            let bin = if r > 0.0 {
                (((d + r) / (2.0 * r)) * DIS_BINS as f64).floor() as isize
            } else {
                (DIS_BINS / 2) as isize
            };
            counts[bin.clamp(0, DIS_BINS as isize - 1) as usize] += 1;
        }
        for (slot, c) in dis[k].iter_mut().zip(counts) {
            *slot = c as f64 / DIS_PAIRS as f64;
        }
        peak[k] = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    }
    Ok(FeatureVector { core, dis, peak })
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("matrix rows must be non-empty and equally long"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `Xᵀ X` and `Xᵀ y`.
    pub fn gram(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        for r in 0..self.rows {
            let row = self.row(r);
            for a in 0..p {
                xty[a] += row[a] * y[r];
                for b in a..p {
                    g[a * p + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        (g, xty)
    }

    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn check_design(x: &Matrix, y: &[f64], lambda: f64) -> Result<()> {
    if y.len() != x.rows {
        return Err(Error::domain(format!("{} targets for {} rows", y.len(), x.rows)));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::domain(format!("lambda {lambda} must be finite and >= 0")));
    }
    Ok(())
}

/// Solves `(XᵀX + λI) β = Xᵀy` by Cholesky factorisation.
pub fn ridge_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_design(x, y, lambda)?;
    let p = x.cols;
    let (mut a, rhs) = x.gram(y);
    for i in 0..p {
        a[i * p + i] += lambda;
    }
    cholesky_solve(&mut a, p, &rhs)
}

fn cholesky_solve(a: &mut [f64], p: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    let scale = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > 1e-12 * scale) {
            return Err(Error::Singular { column: j, pivot: d });
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    let mut z = rhs.to_vec();
    for i in 0..p {
        for k in 0..i {
            z[i] -= a[i * p + k] * z[k];
        }
        z[i] /= a[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            z[i] -= a[k * p + i] * z[k];
        }
        z[i] /= a[i * p + i];
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_sweeps: 100_000,
        }
    }
}

/// Largest violation of the optimality conditions of
/// `‖Xβ - y‖² + λ‖β‖₁`: with `g_j = 2 x_jᵀ(y - Xβ)`, `g_j = λ sign β_j` on
/// the support and `|g_j| ≤ λ` off it.
pub fn lasso_kkt_violation(x: &Matrix, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let fitted = x.mul_vec(beta);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    (0..x.cols)
        .map(|j| {
            let g = 2.0 * (0..x.rows).map(|r| x.get(r, j) * resid[r]).sum::<f64>();
            if beta[j] != 0.0 {
                (g - lambda * beta[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn lasso_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    lasso_fit_with(x, y, lambda, LassoOptions::default())
}

/// Cyclic coordinate descent on `‖Xβ - y‖² + λ‖β‖₁`. Each coordinate update is
/// `β_j = S(x_jᵀ r_j, λ/2) / ‖x_j‖²`, `S` the soft threshold and `r_j` the
/// residual without feature `j`. Stops once the KKT violation is within
/// `tolerance`.
pub fn lasso_fit_with(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    options: LassoOptions,
) -> Result<Vec<f64>> {
    check_design(x, y, lambda)?;
    let p = x.cols;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut beta = vec![0.0; p];
    let mut resid = y.to_vec();
    let half = lambda / 2.0;

    let mut violation = f64::INFINITY;
    for sweep in 0..options.max_sweeps {
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let rho: f64 = cols[j].iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() + norms[j] * old;
            let new = soft_threshold(rho, half) / norms[j];
            if new != old {
                let delta = new - old;
                for (r, a) in resid.iter_mut().zip(&cols[j]) {
                    *r -= delta * a;
                }
                beta[j] = new;
            }
        }
        if sweep % 4 == 3 || sweep + 1 == options.max_sweeps {
            violation = lasso_kkt_violation(x, y, &beta, lambda);
            if violation <= options.tolerance {
                return Ok(beta);
            }
        }
    }
    Err(Error::Convergence {
        sweeps: options.max_sweeps,
        violation,
    })
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Per-column mean and standard deviation. Constant columns get scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        let n = m.rows as f64;
        let mut mean = vec![0.0; m.cols];
        let mut scale = vec![1.0; m.cols];
        for c in 0..m.cols {
            let col = m.column(c);
            let mu = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            mean[c] = mu;
            if var.sqrt() > 1e-12 * (1.0 + mu.abs()) {
                scale[c] = var.sqrt();
            }
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Pearson correlation matrix of the feature columns (row-major, `p × p`).
/// Constant columns correlate 0 with everything but themselves.
pub fn correlation_matrix(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let std = Standardizer::fit(rows)?;
    let z: Vec<Vec<f64>> = rows.iter().map(|r| std.apply(r)).collect();
    let m = Matrix::from_rows(&z)?;
    let n = m.rows as f64;
    let p = m.cols;
    let (g, _) = m.gram(&vec![0.0; m.rows]);
    Ok((0..p)
        .map(|a| {
            (0..p)
                .map(|b| if a == b { 1.0 } else { g[a * p + b] / n })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOptions {
    /// L2 regularisation of the hinge objective.
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self {
            regularization: 1e-3,
            epochs: 60,
            seed: 0,
        }
    }
}

pub const CLASSIFIER_FORMAT: &str = "wristsign-closed-set";

/// One-vs-rest linear classifier. [`ClosedSetClassifier::predict`] returns a
/// class for every input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSetClassifier {
    pub format: String,
    pub version: u32,
    pub classes: Vec<String>,
    pub standardizer: Standardizer,
    /// One weight row per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Feature rows grouped by class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub label: String,
    pub rows: Vec<Vec<f64>>,
}

pub fn train_closed_set(
    classes: &[LabeledFeatures],
    options: ClassifierOptions,
) -> Result<ClosedSetClassifier> {
    if classes.len() < 2 {
        return Err(Error::domain("closed-set training needs at least 2 classes"));
    }
    if let Some(c) = classes.iter().find(|c| c.rows.len() < 2) {
        return Err(Error::domain(format!("class {:?} has fewer than 2 samples", c.label)));
    }
    let all: Vec<Vec<f64>> = classes.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    let standardizer = Standardizer::fit(&all)?;
    let samples: Vec<(usize, Vec<f64>)> = classes
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| c.rows.iter().map(move |r| (ci, r.clone())))
        .map(|(ci, r)| (ci, standardizer.apply(&r)))
        .collect();
    let p = standardizer.mean.len();

    let mut weights = Vec::with_capacity(classes.len());
    let mut bias = Vec::with_capacity(classes.len());
    for ci in 0..classes.len() {
        let (w, b) = pegasos(&samples, ci, p, options);
        weights.push(w);
        bias.push(b);
    }
    Ok(ClosedSetClassifier {
        format: CLASSIFIER_FORMAT.to_owned(),
        version: 1,
        classes: classes.iter().map(|c| c.label.clone()).collect(),
        standardizer,
        weights,
        bias,
    })
}

/// Hinge-loss subgradient descent with step `1/(λt)` (Pegasos). The bias is
/// learned as the weight of a constant unit feature.
fn pegasos(
    samples: &[(usize, Vec<f64>)],
    positive: usize,
    p: usize,
    options: ClassifierOptions,
) -> (Vec<f64>, f64) {
    let lambda = options.regularization;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ (positive as u64).wrapping_mul(0x9E37_79B9));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut t = 1.0;
    for _ in 0..options.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (class, x) = &samples[idx];
            let y = if *class == positive { 1.0 } else { -1.0 };
            let eta = 1.0 / (lambda * t);
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * lambda;
            for wi in w.iter_mut() {
                *wi *= shrink;
            }
            b *= shrink;
            if margin < 1.0 {
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += eta * y * xi;
                }
                b += eta * y;
            }
            t += 1.0;
        }
    }
    (w, b)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ClosedSetClassifier {
    pub fn decision_values(&self, row: &[f64]) -> Vec<f64> {
        let z = self.standardizer.apply(row);
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, &z) + b)
            .collect()
    }

    /// Index of the highest decision value. There is no reject path.
    pub fn predict_index(&self, row: &[f64]) -> usize {
        self.decision_values(row)
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("at least two classes")
    }

    pub fn predict(&self, row: &[f64]) -> &str {
        &self.classes[self.predict_index(row)]
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        if c.format != CLASSIFIER_FORMAT || c.version != 1 {
            return Err(Error::Format(format!("not a {CLASSIFIER_FORMAT} v1 document")));
        }
        let p = c.standardizer.mean.len();
        if c.classes.len() < 2
            || c.weights.len() != c.classes.len()
            || c.bias.len() != c.classes.len()
            || c.standardizer.scale.len() != p
            || c.weights.iter().any(|w| w.len() != p)
        {
            return Err(Error::Format("inconsistent classifier dimensions".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&c.standardizer.mean)
            || !finite(&c.bias)
            || !c.weights.iter().all(|w| finite(w))
            || !c.standardizer.scale.iter().all(|s| s.is_finite() && *s > 0.0)
        {
            return Err(Error::Format("classifier parameters must be finite with positive scales".into()));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: usize,
    pub fold_accuracy: Vec<f64>,
    /// Mean of the fold accuracies.
    pub accuracy: f64,
}

/// Stratified k-fold accuracy: each class's rows are shuffled with `seed` and
/// dealt round-robin to folds. Standardisation is refitted inside each fold.
pub fn cross_validate(
    classes: &[LabeledFeatures],
    folds: usize,
    options: ClassifierOptions,
) -> Result<CrossValidation> {
    if folds < 2 {
        return Err(Error::domain("cross-validation needs at least 2 folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let assignment: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..c.rows.len()).collect();
            idx.shuffle(&mut rng);
            let mut fold_of = vec![0; c.rows.len()];
            for (pos, &i) in idx.iter().enumerate() {
                fold_of[i] = pos % folds;
            }
            fold_of
        })
        .collect();

    let mut fold_accuracy = Vec::with_capacity(folds);
    for f in 0..folds {
        let split = |keep_test: bool| -> Vec<LabeledFeatures> {
            classes
                .iter()
                .zip(&assignment)
                .map(|(c, a)| LabeledFeatures {
                    label: c.label.clone(),
                    rows: c
                        .rows
                        .iter()
                        .zip(a)
                        .filter(|(_, &fold)| (fold == f) == keep_test)
                        .map(|(r, _)| r.clone())
                        .collect(),
                })
                .collect()
        };
        let model = train_closed_set(&split(false), options)?;
        let test = split(true);
        let (mut hit, mut total) = (0usize, 0usize);
        for c in &test {
            for r in &c.rows {
                total += 1;
                hit += usize::from(model.predict(r) == c.label);
            }
        }
        if total > 0 {
            fold_accuracy.push(hit as f64 / total as f64);
        }
    }
    let accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
    Ok(CrossValidation {
        folds,
        fold_accuracy,
        accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub lambda: f64,
    /// Indices of columns with a non-zero lasso coefficient for any class.
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    /// Ridge coefficients of the password-vs-rest target.
    pub ridge: Vec<f64>,
    /// Lasso coefficients of the password-vs-rest target.
    pub lasso: Vec<f64>,
}

/// Regresses ±1 one-vs-rest targets on standardised features. The union of
/// lasso supports over all classes is the selected feature set; the ridge and
/// lasso coefficients for class `reference` are kept for inspection.
pub fn select_features(
    classes: &[LabeledFeatures],
    names: &[String],
    reference: usize,
    lambda: f64,
) -> Result<FeatureSelection> {
    let rows: Vec<Vec<f64>> = classes.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    let std = Standardizer::fit(&rows)?;
    let x = Matrix::from_rows(&rows.iter().map(|r| std.apply(r)).collect::<Vec<_>>())?;
    let labels: Vec<usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| std::iter::repeat_n(ci, c.rows.len()))
        .collect();
    let target = |ci: usize| -> Vec<f64> {
        labels.iter().map(|&l| if l == ci { 1.0 } else { -1.0 }).collect()
    };
    let mut keep = vec![false; x.cols];
    let mut lasso_ref = Vec::new();
    for ci in 0..classes.len() {
        let beta = lasso_fit(&x, &target(ci), lambda)?;
        for (k, b) in keep.iter_mut().zip(&beta) {
            *k |= *b != 0.0;
        }
        if ci == reference {
            lasso_ref = beta;
        }
    }
    let ridge = ridge_fit(&x, &target(reference), lambda)?;
    let selected: Vec<usize> = (0..x.cols).filter(|&j| keep[j]).collect();
    Ok(FeatureSelection {
        lambda,
        selected_names: selected.iter().map(|&j| names[j].clone()).collect(),
        selected,
        ridge,
        lasso: lasso_ref,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlawRow {
    pub word: String,
    pub classifier_label: String,
    pub authenticator_tss: f64,
    pub authenticator_denied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlawReport {
    pub password_class: String,
    pub trials: usize,
    /// Fraction of unseen trials that received some label (always 1).
    pub classifier_labelled: f64,
    /// Fraction of unseen trials labelled as the password class.
    pub classifier_password_rate: f64,
    pub authenticator_denial_rate: f64,
    pub rows: Vec<FlawRow>,
}

/// Runs both systems on trials of words neither was trained on.
/// `features` must match the classifier's training feature layout.
pub fn open_set_flaw_demo(
    classifier: &ClosedSetClassifier,
    password_class: &str,
    unseen: &[(String, Trial)],
    features: impl Fn(&Trial) -> Result<Vec<f64>>,
    profile: &Profile,
) -> Result<FlawReport> {
    if unseen.is_empty() {
        return Err(Error::domain("no unseen-word trials"));
    }
    let mut rows = Vec::with_capacity(unseen.len());
    for (word, trial) in unseen {
        let label = classifier.predict(&features(trial)?).to_owned();
        let report = authenticate(trial, profile)?;
        rows.push(FlawRow {
            word: word.clone(),
            classifier_label: label,
            authenticator_tss: report.tss,
            authenticator_denied: !report.accepted(),
        });
    }
    let n = rows.len() as f64;
    Ok(FlawReport {
        password_class: password_class.to_owned(),
        trials: rows.len(),
        classifier_labelled: rows.iter().filter(|r| !r.classifier_label.is_empty()).count() as f64 / n,
        classifier_password_rate: rows.iter().filter(|r| r.classifier_label == password_class).count()
            as f64
            / n,
        authenticator_denial_rate: rows.iter().filter(|r| r.authenticator_denied).count() as f64 / n,
        rows,
    })
}

/// Feature matrix CSV with a header row of [`feature_names`] and a leading
/// `label` column.
pub fn features_to_csv(classes: &[LabeledFeatures], all: bool) -> String {
    let mut out = String::from("label");
    for n in feature_names(all) {
        out.push(',');
        out.push_str(&n);
    }
    out.push('\n');
    for c in classes {
        for r in &c.rows {
            out.push_str(&c.label);
            for v in r {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}
