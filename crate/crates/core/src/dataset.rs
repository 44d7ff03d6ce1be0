//! Experiment datasets: seeded generation and the on-disk manifest.
//!
//! `manifest.toml` names every trial file of a dataset relative to its own
//! directory:
//!
//! ```toml
//! format = "wristsign-manifest"
//! version = 1
//! seed = 42                 # optional
//!
//! [config]                  # optional, generator settings
//! ...
//!
//! [[users]]
//! id = "u00"
//! enroll = ["users/u00/enroll-00.csv", ...]
//! genuine = ["users/u00/genuine-00.csv", ...]
//!
//! [attack]                  # optional
//! target = "u00"
//! enroll = [...]
//! genuine = [...]
//! [[attack.scenarios]]
//! name = "word"
//! strength = 0.0            # optional
//! trials = [...]
//!
//! [fault]                   # optional
//! fractions = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
//! clean = [...]
//! bad = [...]
//! test_genuine = [...]
//! test_bad = [...]
//!
//! [words]                   # optional, closed-set contrast
//! password = "love"
//! enroll = [...]
//! [[words.classes]]
//! word = "love"
//! trials = [...]
//! [[words.unseen]]
//! word = "w100"
//! trials = [...]
//! ```
//!
//! Hand-written manifests over recorded trials work the same way; only
//! `users` is required.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Scenario, UserTrials};
use crate::signal::{read_trial, write_trial_file, Trial};
use crate::synth::{derive_seed, gen_bad_trial, gen_mimic, gen_trial, gen_user, MimicSpec, UserStyle};

pub const MANIFEST_FORMAT: &str = "wristsign-manifest";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub users: usize,
    pub enroll: usize,
    pub genuine: usize,
    pub attack: Option<AttackConfig>,
    pub fault: Option<FaultConfig>,
    pub words: Option<WordConfig>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            users: 15,
            enroll: 5,
            genuine: 10,
            attack: Some(AttackConfig::default()),
            fault: Some(FaultConfig::default()),
            words: Some(WordConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub enroll: usize,
    pub genuine: usize,
    pub attackers: usize,
    pub trials_per_attacker: usize,
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub strength: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            enroll: 25,
            genuine: 10,
            attackers: 15,
            trials_per_attacker: 10,
            scenarios: [("word", 0.0), ("script", 0.5), ("all-simulating", 0.8)]
                .into_iter()
                .map(|(name, strength)| ScenarioConfig {
                    name: name.to_owned(),
                    strength,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    pub clean: usize,
    pub bad: usize,
    pub test_genuine: usize,
    pub test_bad: usize,
    pub fractions: Vec<f64>,
}

impl Default for FaultConfig {
    fn default() -> Self {
        Self {
            clean: 10,
            bad: 10,
            test_genuine: 50,
            test_bad: 50,
            fractions: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WordConfig {
    pub password: String,
    /// Known classes, the password included.
    pub classes: usize,
    pub samples: usize,
    /// Enrollment trials of the password for the DTW authenticator.
    pub enroll: usize,
    pub unseen_words: usize,
    pub unseen_samples: usize,
}

impl Default for WordConfig {
    fn default() -> Self {
        Self {
            password: "love".to_owned(),
            classes: 10,
            samples: 20,
            enroll: 5,
            unseen_words: 10,
            unseen_samples: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSet {
    pub target: String,
    pub enroll: Vec<Trial>,
    pub genuine: Vec<Trial>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSet {
    pub clean: Vec<Trial>,
    pub bad: Vec<Trial>,
    pub test_genuine: Vec<Trial>,
    pub test_bad: Vec<Trial>,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordTrials {
    pub word: String,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordSet {
    pub password: String,
    pub enroll: Vec<Trial>,
    pub classes: Vec<WordTrials>,
    pub unseen: Vec<WordTrials>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seed: Option<u64>,
    pub config: Option<SynthConfig>,
    pub users: Vec<UserTrials>,
    pub attack: Option<AttackSet>,
    pub fault: Option<FaultSet>,
    pub words: Option<WordSet>,
}

// Stream tags keep every role's seeds disjoint.
const USER_STYLE: u64 = 1;
const ATTACKER_STYLE: u64 = 2;
const FAULT_STYLE: u64 = 3;
const WORD_STYLE: u64 = 4;
const UNSEEN_STYLE: u64 = 5;

fn style(seed: u64, role: u64, index: usize) -> UserStyle {
    gen_user(derive_seed(derive_seed(seed, role), index as u64))
}

fn trial_seed(seed: u64, role: &str, index: usize) -> u64 {
    let tag = role.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    derive_seed(derive_seed(seed, tag), index as u64)
}

fn label(trial: Trial, user: &str, word: &str) -> Trial {
    trial
        .with_user(user)
        .and_then(|t| t.with_word(word))
        .expect("generated labels are plain")
}

fn genuine_run(style: &UserStyle, seed: u64, role: &str, count: usize, user: &str, word: &str) -> Vec<Trial> {
    (0..count)
        .map(|i| label(gen_trial(style, trial_seed(seed, role, i)), user, word))
        .collect()
}

pub fn user_id(i: usize) -> String {
    format!("u{i:02}")
}

pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    let seed = config.seed;
    if config.users < 2 || config.enroll < 2 || config.genuine < 1 {
        return Err(Error::domain("need >= 2 users, >= 2 enrollment and >= 1 genuine trial each"));
    }
    let password = config
        .words
        .as_ref()
        .map_or_else(|| "love".to_owned(), |w| w.password.clone());

    let users = (0..config.users)
        .map(|u| {
            let id = user_id(u);
            let st = style(seed, USER_STYLE, u);
            UserTrials {
                enroll: genuine_run(&st, seed, &format!("{id}/enroll"), config.enroll, &id, &password),
                genuine: genuine_run(&st, seed, &format!("{id}/genuine"), config.genuine, &id, &password),
                id,
            }
        })
        .collect();

    let target = style(seed, USER_STYLE, 0);
    let target_id = user_id(0);

    let attack = config
        .attack
        .as_ref()
        .map(|ac| -> Result<AttackSet> {
            if ac.enroll < 2 || ac.genuine < 1 || ac.attackers < 1 || ac.trials_per_attacker < 1 {
                return Err(Error::domain("attack set sizes too small"));
            }
            let mut scenarios = Vec::with_capacity(ac.scenarios.len());
            for sc in &ac.scenarios {
                let mut trials = Vec::with_capacity(ac.attackers * ac.trials_per_attacker);
                for a in 0..ac.attackers {
                    let spec = MimicSpec::new(style(seed, ATTACKER_STYLE, a), target.clone(), sc.strength)?;
                    let attacker = format!("a{a:02}");
                    for i in 0..ac.trials_per_attacker {
                        let ts = trial_seed(seed, &format!("attack/{}/{attacker}", sc.name), i);
                        trials.push(label(gen_mimic(&spec, ts), &attacker, &password));
                    }
                }
                scenarios.push(Scenario {
                    name: sc.name.clone(),
                    strength: Some(sc.strength),
                    trials,
                });
            }
            Ok(AttackSet {
                target: target_id.clone(),
                enroll: genuine_run(&target, seed, "attack/enroll", ac.enroll, &target_id, &password),
                genuine: genuine_run(&target, seed, "attack/genuine", ac.genuine, &target_id, &password),
                scenarios,
            })
        })
        .transpose()?;

    let fault = config.fault.as_ref().map(|fc| {
        let st = style(seed, FAULT_STYLE, 0);
        let id = "f00";
        let bad_run = |role: &str, count: usize| -> Vec<Trial> {
            (0..count)
                .map(|i| label(gen_bad_trial(&st, trial_seed(seed, role, i)), id, &password))
                .collect()
        };
        FaultSet {
            clean: genuine_run(&st, seed, "fault/clean", fc.clean, id, &password),
            bad: bad_run("fault/bad", fc.bad),
            test_genuine: genuine_run(&st, seed, "fault/test-genuine", fc.test_genuine, id, &password),
            test_bad: bad_run("fault/test-bad", fc.test_bad),
            fractions: fc.fractions.clone(),
        }
    });

    let words = config.words.as_ref().map(|wc| {
        let mut classes = vec![WordTrials {
            word: wc.password.clone(),
            trials: genuine_run(&target, seed, "words/password", wc.samples, &target_id, &wc.password),
        }];
        for c in 1..wc.classes {
            let word = format!("w{c:02}");
            let st = style(seed, WORD_STYLE, c);
            classes.push(WordTrials {
                trials: genuine_run(&st, seed, &format!("words/{word}"), wc.samples, &target_id, &word),
                word,
            });
        }
        let unseen = (0..wc.unseen_words)
            .map(|w| {
                let word = format!("x{w:02}");
                let st = style(seed, UNSEEN_STYLE, w);
                WordTrials {
                    trials: genuine_run(&st, seed, &format!("unseen/{word}"), wc.unseen_samples, &target_id, &word),
                    word,
                }
            })
            .collect();
        WordSet {
            password: wc.password.clone(),
            enroll: genuine_run(&target, seed, "words/enroll", wc.enroll, &target_id, &wc.password),
            classes,
            unseen,
        }
    });

    Ok(Dataset {
        seed: Some(seed),
        config: Some(config.clone()),
        users,
        attack,
        fault,
        words,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SynthConfig>,
    pub users: Vec<ManifestUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<ManifestAttack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<ManifestFault>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<ManifestWords>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestUser {
    pub id: String,
    pub enroll: Vec<String>,
    pub genuine: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestAttack {
    pub target: String,
    pub enroll: Vec<String>,
    pub genuine: Vec<String>,
    pub scenarios: Vec<ManifestScenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestScenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    pub trials: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFault {
    pub fractions: Vec<f64>,
    pub clean: Vec<String>,
    pub bad: Vec<String>,
    pub test_genuine: Vec<String>,
    pub test_bad: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestWords {
    pub password: String,
    pub enroll: Vec<String>,
    pub classes: Vec<ManifestWord>,
    pub unseen: Vec<ManifestWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestWord {
    pub word: String,
    pub trials: Vec<String>,
}

impl Manifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text)?;
        if m.format != MANIFEST_FORMAT || m.version != 1 {
            return Err(Error::Format(format!("not a {MANIFEST_FORMAT} v1 document")));
        }
        if m.users.is_empty() {
            return Err(Error::Format("manifest lists no users".into()));
        }
        for path in m.files() {
            let p = Path::new(path);
            if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(Error::Format(format!("trial path {path:?} must be relative and inside the dataset")));
            }
        }
        Ok(m)
    }

    /// Every trial path in the manifest.
    pub fn files(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for u in &self.users {
            out.extend(u.enroll.iter().chain(&u.genuine).map(String::as_str));
        }
        if let Some(a) = &self.attack {
            out.extend(a.enroll.iter().chain(&a.genuine).map(String::as_str));
            for s in &a.scenarios {
                out.extend(s.trials.iter().map(String::as_str));
            }
        }
        if let Some(f) = &self.fault {
            out.extend(
                f.clean
                    .iter()
                    .chain(&f.bad)
                    .chain(&f.test_genuine)
                    .chain(&f.test_bad)
                    .map(String::as_str),
            );
        }
        if let Some(w) = &self.words {
            out.extend(w.enroll.iter().map(String::as_str));
            for c in w.classes.iter().chain(&w.unseen) {
                out.extend(c.trials.iter().map(String::as_str));
            }
        }
        out
    }
}

struct Writer<'a> {
    root: &'a Path,
}

impl Writer<'_> {
    fn put(&self, rel: String, trial: &Trial) -> Result<String> {
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_trial_file(&path, trial)?;
        Ok(rel)
    }

    fn run(&self, prefix: &str, trials: &[Trial]) -> Result<Vec<String>> {
        trials
            .iter()
            .enumerate()
            .map(|(i, t)| self.put(format!("{prefix}-{i:02}.csv"), t))
            .collect()
    }
}

/// Writes every trial as CSV under `dir` plus `manifest.toml`; returns the
/// manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let w = Writer { root: dir };
    let users = dataset
        .users
        .iter()
        .map(|u| {
            Ok(ManifestUser {
                id: u.id.clone(),
                enroll: w.run(&format!("users/{}/enroll", u.id), &u.enroll)?,
                genuine: w.run(&format!("users/{}/genuine", u.id), &u.genuine)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let attack = dataset
        .attack
        .as_ref()
        .map(|a| -> Result<ManifestAttack> {
            Ok(ManifestAttack {
                target: a.target.clone(),
                enroll: w.run("attack/enroll", &a.enroll)?,
                genuine: w.run("attack/genuine", &a.genuine)?,
                scenarios: a
                    .scenarios
                    .iter()
                    .map(|s| {
                        Ok(ManifestScenario {
                            name: s.name.clone(),
                            strength: s.strength,
                            trials: w.run(&format!("attack/{}/trial", s.name), &s.trials)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            })
        })
        .transpose()?;
    let fault = dataset
        .fault
        .as_ref()
        .map(|f| -> Result<ManifestFault> {
            Ok(ManifestFault {
                fractions: f.fractions.clone(),
                clean: w.run("fault/clean", &f.clean)?,
                bad: w.run("fault/bad", &f.bad)?,
                test_genuine: w.run("fault/test-genuine", &f.test_genuine)?,
                test_bad: w.run("fault/test-bad", &f.test_bad)?,
            })
        })
        .transpose()?;
    let words = dataset
        .words
        .as_ref()
        .map(|ws| -> Result<ManifestWords> {
            let group = |kind: &str, list: &[WordTrials]| -> Result<Vec<ManifestWord>> {
                list.iter()
                    .map(|c| {
                        Ok(ManifestWord {
                            word: c.word.clone(),
                            trials: w.run(&format!("words/{kind}/{}", c.word), &c.trials)?,
                        })
                    })
                    .collect()
            };
            Ok(ManifestWords {
                password: ws.password.clone(),
                enroll: w.run("words/enroll", &ws.enroll)?,
                classes: group("known", &ws.classes)?,
                unseen: group("unseen", &ws.unseen)?,
            })
        })
        .transpose()?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_owned(),
        version: 1,
        seed: dataset.seed,
        config: dataset.config.clone(),
        users,
        attack,
        fault,
        words,
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, toml::to_string(&manifest)?)?;
    Ok(path)
}

fn load_run(root: &Path, paths: &[String]) -> Result<Vec<Trial>> {
    paths
        .iter()
        .map(|p| {
            read_trial(&root.join(p)).map_err(|e| match e {
                Error::Io(io) => Error::Format(format!("{p}: {io}")),
                other => Error::Format(format!("{p}: {other}")),
            })
        })
        .collect()
}

/// Reads a manifest and every trial it references.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(manifest_path)?;
    let m = Manifest::from_toml_str(&text)?;
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let users = m
        .users
        .iter()
        .map(|u| {
            Ok(UserTrials {
                id: u.id.clone(),
                enroll: load_run(root, &u.enroll)?,
                genuine: load_run(root, &u.genuine)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let attack = m
        .attack
        .as_ref()
        .map(|a| -> Result<AttackSet> {
            Ok(AttackSet {
                target: a.target.clone(),
                enroll: load_run(root, &a.enroll)?,
                genuine: load_run(root, &a.genuine)?,
                scenarios: a
                    .scenarios
                    .iter()
                    .map(|s| {
                        Ok(Scenario {
                            name: s.name.clone(),
                            strength: s.strength,
                            trials: load_run(root, &s.trials)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            })
        })
        .transpose()?;
    let fault = m
        .fault
        .as_ref()
        .map(|f| -> Result<FaultSet> {
            Ok(FaultSet {
                clean: load_run(root, &f.clean)?,
                bad: load_run(root, &f.bad)?,
                test_genuine: load_run(root, &f.test_genuine)?,
                test_bad: load_run(root, &f.test_bad)?,
                fractions: f.fractions.clone(),
            })
        })
        .transpose()?;
    let words = m
        .words
        .as_ref()
        .map(|ws| -> Result<WordSet> {
            let group = |list: &[ManifestWord]| -> Result<Vec<WordTrials>> {
                list.iter()
                    .map(|c| {
                        Ok(WordTrials {
                            word: c.word.clone(),
                            trials: load_run(root, &c.trials)?,
                        })
                    })
                    .collect()
            };
            Ok(WordSet {
                password: ws.password.clone(),
                enroll: load_run(root, &ws.enroll)?,
                classes: group(&ws.classes)?,
                unseen: group(&ws.unseen)?,
            })
        })
        .transpose()?;
    Ok(Dataset {
        seed: m.seed,
        config: m.config,
        users,
        attack,
        fault,
        words,
    })
}
