//! Run configuration file (TOML). Every section and key is optional:
//!
//! ```toml
//! seed = 42
//!
//! [synth]
//! users = 15
//! enroll = 5
//!
//! [eval]
//! threshold = 0.55
//! weights = [0.1667, 0.1667, 0.1667, 0.1667, 0.1667, 0.1665]
//! filter = { window = 9, degree = 2 }
//! attack_threshold = 0.65
//! calibrated_threshold = 0.62
//!
//! [baseline]
//! folds = 5
//! lasso_lambda = 10.0
//! ```
//!
//! Command-line flags take precedence over the file, the file over defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wristsign::dataset::SynthConfig;
use wristsign::experiment::{BaselineConfig, EvalConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
    pub baseline: BaselineConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
