//! Signature authentication from wrist-worn motion sensors.
//!
//! A user enrolls a handful of trials of a written word. Each trial holds six
//! channels (three accelerometer, three gyroscope axes). Trials are smoothed
//! with a Savitzky-Golay filter and compared channel by channel with dynamic
//! time warping; a probe is accepted when its weighted similarity to the
//! enrollment group clears a threshold.
//!
//! ```
//! use wristsign::{authenticate, synth, train, TrainOptions};
//!
//! let style = synth::gen_user(1);
//! let enroll: Vec<_> = (0..5).map(|i| synth::gen_trial(&style, i)).collect();
//! let profile = train(&enroll, TrainOptions::default()).unwrap();
//! let report = authenticate(&synth::gen_trial(&style, 99), &profile).unwrap();
//! assert!(report.tss > 0.0 && report.tss <= 1.0);
//! ```

pub mod auth;
pub mod baseline;
pub mod dataset;
pub mod dsp;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod profile;
pub mod signal;
pub mod synth;

pub use auth::{authenticate, Decision, ScoreReport};
pub use dtw::{dtw_distance, DistanceVector};
pub use error::{Error, Result};
pub use profile::{train, DimensionWeights, Profile, TrainOptions};
pub use signal::{MotionSample, Trial, TrialFormat};
