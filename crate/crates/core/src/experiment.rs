//! End-to-end runs over a [`Dataset`] producing deterministic JSON reports.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::auth::{calibrate_weights, Calibration};
use crate::baseline::{
    cross_validate, extract_features, feature_names, open_set_flaw_demo, select_features,
    train_closed_set, ClassifierOptions, ClosedSetClassifier, CrossValidation, FeatureSelection,
    FlawReport, LabeledFeatures, CORE_LEN,
};
use crate::dataset::{Dataset, WordSet};
use crate::dsp::{filter_trial_with, SgConfig};
use crate::error::{Error, Result};
use crate::eval::{
    attack_eval, discrimination, fault_tolerance_sweep, median, spearman, DiscriminationReport,
    FaultPoint, ScenarioReport,
};
use crate::profile::{check_threshold, train, DimensionWeights, TrainOptions, DEFAULT_THRESHOLD};
use crate::signal::Trial;
use crate::synth::derive_seed;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub threshold: f64,
    pub weights: DimensionWeights,
    pub filter: SgConfig,
    /// Threshold of the attack experiment.
    pub attack_threshold: f64,
    /// Re-run discrimination with AUC-calibrated weights at this threshold.
    pub calibrated_threshold: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            weights: DimensionWeights::uniform(),
            filter: SgConfig::default(),
            attack_threshold: crate::auth::HARDENED_THRESHOLD,
            calibrated_threshold: Some(crate::auth::BALANCED_THRESHOLD),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        check_threshold(self.threshold)?;
        check_threshold(self.attack_threshold)?;
        if let Some(t) = self.calibrated_threshold {
            check_threshold(t)?;
        }
        self.filter.validate()
    }

    fn options(&self, threshold: f64) -> TrainOptions {
        TrainOptions {
            weights: self.weights,
            threshold,
            filter: self.filter,
        }
    }
}

/// SHA-256 of the canonical JSON of a config value, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedRun {
    pub calibration: Calibration,
    pub discrimination: DiscriminationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub target: String,
    pub threshold: f64,
    pub genuine_median_tss: f64,
    pub genuine_accept_rate: f64,
    pub scenarios: Vec<ScenarioReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultReport {
    pub threshold: f64,
    pub points: Vec<FaultPoint>,
    /// Rank correlation of genuine acceptance with the bad fraction.
    pub tpr_spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub config: EvalConfig,
    pub discrimination: DiscriminationReport,
    pub calibrated: Option<CalibratedRun>,
    pub attack: Option<AttackReport>,
    pub fault_tolerance: Option<FaultReport>,
}

impl EvalReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Serialize)]
struct Hashed<'a, T> {
    seed: Option<u64>,
    config: &'a T,
}

pub fn run_evaluation(dataset: &Dataset, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    let (disc, scores) = discrimination(&dataset.users, config.options(config.threshold))?;

    let calibrated = config
        .calibrated_threshold
        .map(|t| -> Result<CalibratedRun> {
            let calibration = calibrate_weights(&scores.genuine_ss(), &scores.impostor_ss())?;
            let options = TrainOptions {
                weights: calibration.weights,
                ..config.options(t)
            };
            let (discrimination, _) = discrimination(&dataset.users, options)?;
            Ok(CalibratedRun {
                calibration,
                discrimination,
            })
        })
        .transpose()?;

    let attack = dataset
        .attack
        .as_ref()
        .map(|a| -> Result<AttackReport> {
            let profile = train(&a.enroll, config.options(config.attack_threshold))?;
            let genuine = crate::eval::attack_eval(
                &profile,
                &[crate::eval::Scenario {
                    name: "genuine".into(),
                    strength: None,
                    trials: a.genuine.clone(),
                }],
            )?;
            Ok(AttackReport {
                target: a.target.clone(),
                threshold: config.attack_threshold,
                genuine_median_tss: median(&genuine[0].tss)?,
                genuine_accept_rate: genuine[0].accept_rate,
                scenarios: attack_eval(&profile, &a.scenarios)?,
            })
        })
        .transpose()?;

    let fault_tolerance = dataset
        .fault
        .as_ref()
        .map(|f| -> Result<FaultReport> {
            let points = fault_tolerance_sweep(
                &f.clean,
                &f.bad,
                &f.test_genuine,
                &f.test_bad,
                &f.fractions,
                config.options(config.threshold),
            )?;
            let fr: Vec<f64> = points.iter().map(|p| p.fraction).collect();
            let tpr: Vec<f64> = points.iter().map(|p| p.tpr).collect();
            Ok(FaultReport {
                threshold: config.threshold,
                tpr_spearman: spearman(&fr, &tpr),
                points,
            })
        })
        .transpose()?;

    Ok(EvalReport {
        version: REPORT_VERSION,
        seed: dataset.seed,
        config_hash: config_hash(&Hashed {
            seed: dataset.seed,
            config,
        })?,
        config: config.clone(),
        discrimination: disc,
        calibrated,
        attack,
        fault_tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Seeds the difference-histogram index pairs and the classifier.
    pub seed: u64,
    pub folds: usize,
    pub lasso_lambda: f64,
    pub classifier: ClassifierOptions,
    /// Authenticator settings for the open-set comparison.
    pub threshold: f64,
    pub filter: SgConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            folds: 5,
            lasso_lambda: 10.0,
            classifier: ClassifierOptions::default(),
            threshold: DEFAULT_THRESHOLD,
            filter: SgConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub features: String,
    pub columns: usize,
    pub cv: CrossValidation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub version: u32,
    pub config_hash: String,
    pub config: BaselineConfig,
    pub classes: Vec<String>,
    pub samples_per_class: Vec<usize>,
    pub selection: FeatureSelection,
    pub cross_validation: Vec<CvSummary>,
    pub flaw: FlawReport,
}

impl BaselineReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub struct BaselineRun {
    pub report: BaselineReport,
    /// Trained on every known trial with all features.
    pub classifier: ClosedSetClassifier,
    /// All-feature rows per known class.
    pub features: Vec<LabeledFeatures>,
}

fn project(classes: &[LabeledFeatures], cols: &[usize]) -> Vec<LabeledFeatures> {
    classes
        .iter()
        .map(|c| LabeledFeatures {
            label: c.label.clone(),
            rows: c
                .rows
                .iter()
                .map(|r| cols.iter().map(|&j| r[j]).collect())
                .collect(),
        })
        .collect()
}

pub fn run_baseline(words: &WordSet, config: &BaselineConfig) -> Result<BaselineRun> {
    check_threshold(config.threshold)?;
    config.filter.validate()?;
    let password = words
        .classes
        .iter()
        .position(|c| c.word == words.password)
        .ok_or_else(|| Error::domain(format!("password {:?} is not a known class", words.password)))?;
    let feature_seed = derive_seed(config.seed, 0x4645_4154);
    let features = |t: &Trial| -> Result<Vec<f64>> {
        let filtered = filter_trial_with(t, config.filter)?;
        Ok(extract_features(&filtered, feature_seed)?.to_vec(true))
    };
    let classes = words
        .classes
        .iter()
        .map(|c| {
            Ok(LabeledFeatures {
                label: c.word.clone(),
                rows: c.trials.iter().map(&features).collect::<Result<Vec<_>>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let all_names = feature_names(true);
    let core_cols: Vec<usize> = (0..CORE_LEN).collect();
    let core = project(&classes, &core_cols);
    let selection = select_features(&core, &all_names[..CORE_LEN], password, config.lasso_lambda)?;
    let selected_all: Vec<usize> = selection
        .selected
        .iter()
        .copied()
        .chain(CORE_LEN..all_names.len())
        .collect();

    let options = ClassifierOptions {
        seed: derive_seed(config.seed, 0x4356),
        ..config.classifier
    };
    let mut cross_validation = Vec::new();
    for (name, cols) in [
        ("core", core_cols.clone()),
        ("core+lasso", selection.selected.clone()),
        ("all", (0..all_names.len()).collect()),
        ("all+lasso", selected_all),
    ] {
        if cols.is_empty() {
            continue;
        }
        cross_validation.push(CvSummary {
            features: name.to_owned(),
            columns: cols.len(),
            cv: cross_validate(&project(&classes, &cols), config.folds, options)?,
        });
    }

    let classifier = train_closed_set(&classes, options)?;
    let profile = train(
        &words.enroll,
        TrainOptions {
            weights: DimensionWeights::uniform(),
            threshold: config.threshold,
            filter: config.filter,
        },
    )?;
    let unseen: Vec<(String, Trial)> = words
        .unseen
        .iter()
        .flat_map(|w| w.trials.iter().map(|t| (w.word.clone(), t.clone())))
        .collect();
    let flaw = open_set_flaw_demo(&classifier, &words.password, &unseen, &features, &profile)?;

    let report = BaselineReport {
        version: REPORT_VERSION,
        config_hash: config_hash(config)?,
        config: config.clone(),
        classes: classes.iter().map(|c| c.label.clone()).collect(),
        samples_per_class: classes.iter().map(|c| c.rows.len()).collect(),
        selection,
        cross_validation,
        flaw,
    };
    Ok(BaselineRun {
        report,
        classifier,
        features: classes,
    })
}
