//! Seeded synthetic writing signals.
//!
//! Each writer's word is a per-channel mixture of eight sinusoids over the
//! writer's nominal duration. A trial replays that template with a jittered
//! duration and amplitude, a smooth monotone time warp, and white noise at 5%
//! of the channel RMS. Mimic attacks blend the attacker's and the target's
//! templates before any jitter is applied; bad trials are genuine trials with
//! a reversed segment and an amplitude burst.
//!
//! Everything is a pure function of the seeds.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Trial, DEFAULT_RATE, DIMENSIONS};

pub const COMPONENTS: usize = 8;

/// Typical channel magnitudes: acceleration in g, angular velocity in deg/s.
const CHANNEL_SCALE: [f64; DIMENSIONS] = [0.4, 0.4, 0.4, 60.0, 60.0, 60.0];

const NOISE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub amplitude: f64,
    /// Hz, relative to the writer's nominal duration.
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStyle {
    pub seed: u64,
    pub channels: [[Component; COMPONENTS]; DIMENSIONS],
    /// Nominal writing duration in seconds.
    pub tempo: f64,
    pub size_scale: f64,
}

impl UserStyle {
    /// Template value of channel `k` at normalised time `u ∈ [0, 1]`.
    pub fn template(&self, k: usize, u: f64) -> f64 {
        let time = u * self.tempo;
        self.size_scale
            * self.channels[k]
                .iter()
                .map(|c| c.amplitude * (TAU * c.frequency * time + c.phase).sin())
                .sum::<f64>()
    }
}

/// Mixes a base seed with a stream tag (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gen_user(seed: u64) -> UserStyle {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5354_594c));
    let channels = std::array::from_fn(|k| {
        std::array::from_fn(|_| {
            let frequency = rng.random_range(0.5..6.0);
            // Writing energy concentrates at the low end.
            let amplitude =
                CHANNEL_SCALE[k] * rng.random_range(0.3..1.0) / (1.0 + frequency / 2.0);
            Component {
                amplitude,
                frequency,
                phase: rng.random_range(0.0..TAU),
            }
        })
    });
    UserStyle {
        seed,
        channels,
        tempo: rng.random_range(1.5..2.5),
        size_scale: rng.random_range(0.8..1.2),
    }
}

/// `φ(u) = u + a₁ sin(πu)/π + a₂ sin(2πu)/(2π)` with `|a₁| + |a₂| ≤ 0.1`, so
/// `φ(0) = 0`, `φ(1) = 1` and `φ' ∈ [0.9, 1.1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWarp {
    a1: f64,
    a2: f64,
}

impl TimeWarp {
    fn sample(rng: &mut impl Rng) -> Self {
        Self {
            a1: rng.random_range(-0.06..0.06),
            a2: rng.random_range(-0.04..0.04),
        }
    }

    pub fn apply(&self, u: f64) -> f64 {
        u + self.a1 * (PI * u).sin() / PI + self.a2 * (TAU * u).sin() / TAU
    }

    pub fn slope(&self, u: f64) -> f64 {
        1.0 + self.a1 * (PI * u).cos() + self.a2 * (TAU * u).cos()
    }
}

fn render(
    template: impl Fn(usize, f64) -> f64,
    tempo: f64,
    rng: &mut ChaCha8Rng,
) -> [Vec<f64>; DIMENSIONS] {
    let duration = tempo * rng.random_range(0.9..1.1);
    let lo = (0.9 * DEFAULT_RATE * tempo).ceil() as usize;
    let hi = (1.1 * DEFAULT_RATE * tempo).floor() as usize;
    let len = ((duration * DEFAULT_RATE).round() as usize).clamp(lo, hi);
    let amplitude = rng.random_range(0.95..1.05);
    let warp = TimeWarp::sample(rng);

    let mut channels: [Vec<f64>; DIMENSIONS] = std::array::from_fn(|k| {
        (0..len)
            .map(|i| amplitude * template(k, warp.apply(i as f64 / (len - 1) as f64)))
            .collect()
    });
    for channel in &mut channels {
        let rms = (channel.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
        if rms > 0.0 {
            let noise = Normal::new(0.0, NOISE_FRACTION * rms).expect("finite sigma");
            for v in channel.iter_mut() {
                *v += noise.sample(rng);
            }
        }
    }
    channels
}

fn trial_rng(style_seed: u64, trial_seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(style_seed, tag), trial_seed))
}

fn to_trial(channels: &[Vec<f64>; DIMENSIONS]) -> Trial {
    Trial::from_channels(channels, DEFAULT_RATE).expect("generated trials are valid")
}

/// One genuine trial of `style`.
pub fn gen_trial(style: &UserStyle, trial_seed: u64) -> Trial {
    let mut rng = trial_rng(style.seed, trial_seed, 0x5452_4941);
    to_trial(&render(|k, u| style.template(k, u), style.tempo, &mut rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimicSpec {
    pub attacker: UserStyle,
    pub target: UserStyle,
    strength: f64,
}

impl MimicSpec {
    pub fn new(attacker: UserStyle, target: UserStyle, strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::domain(format!("mimic strength {strength} outside [0, 1]")));
        }
        Ok(Self {
            attacker,
            target,
            strength,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }
}

/// The attacker writes the blend `(1-m)·own + m·target` of the two templates,
/// at a blended tempo, with the attacker's own jitter stream. At `m = 0` this
/// is exactly [`gen_trial`] for the attacker.
pub fn gen_mimic(spec: &MimicSpec, trial_seed: u64) -> Trial {
    let m = spec.strength;
    let (a, t) = (&spec.attacker, &spec.target);
    let tempo = (1.0 - m) * a.tempo + m * t.tempo;
    let mut rng = trial_rng(a.seed, trial_seed, 0x5452_4941);
    let template = |k: usize, u: f64| {
        if m == 0.0 {
            a.template(k, u)
        } else {
            (1.0 - m) * a.template(k, u) + m * t.template(k, u)
        }
    };
    to_trial(&render(template, tempo, &mut rng))
}

/// A genuine trial written "the wrong way": a random segment (20-40% of the
/// trial) is time-reversed and a random 20% window is amplified threefold.
pub fn gen_bad_trial(style: &UserStyle, trial_seed: u64) -> Trial {
    let mut rng = trial_rng(style.seed, trial_seed, 0x4241_4454);
    let mut channels = render(|k, u| style.template(k, u), style.tempo, &mut rng);
    let len = channels[0].len();

    let seg = ((len as f64) * rng.random_range(0.2..0.4)).round() as usize;
    let start = rng.random_range(0..=len - seg);
    let burst = ((len as f64) * 0.2).round() as usize;
    let burst_start = rng.random_range(0..=len - burst);
    for channel in &mut channels {
        channel[start..start + seg].reverse();
        for v in &mut channel[burst_start..burst_start + burst] {
            *v *= 3.0;
        }
    }
    to_trial(&channels)
}
