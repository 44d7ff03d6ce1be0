//! Trial data model and the CSV / JSONL recording formats.
//!
//! A trial is one recording of one handwritten word: a strictly time-ordered
//! series of six-channel samples `(ax, ay, az, gx, gy, gz)`, acceleration in
//! g and angular velocity in degrees per second. Every weight vector in the
//! crate indexes channels in this order.
//!
//! CSV layout:
//!
//! ```text
//! # user=alice
//! # word=love
//! t,ax,ay,az,gx,gy,gz
//! 0,0.01,-0.98,0.12,3.5,-1.25,0.4
//! ...
//! ```
//!
//! Comment lines start with `#`; `# key=value` comments carry metadata
//! (`user`, `word`, and `rate` when the nominal rate is not 62 Hz). Other
//! comments are ignored. JSONL carries one object per sample with the seven
//! keys above, optionally preceded by a metadata object
//! `{"user": .., "word": .., "rate": ..}`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Number of motion dimensions per sample.
pub const DIMENSIONS: usize = 6;

/// Shortest trial the default filter window can process.
pub const MIN_TRIAL_LEN: usize = 9;

/// Nominal sample rate of the recording device, in Hz.
pub const DEFAULT_RATE: f64 = 62.0;

pub const CHANNEL_NAMES: [&str; DIMENSIONS] = ["ax", "ay", "az", "gx", "gy", "gz"];

pub const CSV_HEADER: &str = "t,ax,ay,az,gx,gy,gz";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    /// Seconds since the start of the recording.
    pub t: f64,
    /// Channel values in `CHANNEL_NAMES` order.
    pub motion: [f64; DIMENSIONS],
}

impl MotionSample {
    pub fn new(t: f64, motion: [f64; DIMENSIONS]) -> Self {
        Self { t, motion }
    }

    pub fn ax(&self) -> f64 {
        self.motion[0]
    }
    pub fn ay(&self) -> f64 {
        self.motion[1]
    }
    pub fn az(&self) -> f64 {
        self.motion[2]
    }
    pub fn gx(&self) -> f64 {
        self.motion[3]
    }
    pub fn gy(&self) -> f64 {
        self.motion[4]
    }
    pub fn gz(&self) -> f64 {
        self.motion[5]
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(format!("timestamp {} is not a finite non-negative number", self.t));
        }
        if let Some(k) = self.motion.iter().position(|v| !v.is_finite()) {
            return Err(format!("non-finite value in column {}", CHANNEL_NAMES[k]));
        }
        Ok(())
    }
}

/// One motion dimension of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel(Vec<f64>);

impl Channel {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for Channel {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl AsRef<[f64]> for Channel {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    samples: Vec<MotionSample>,
    user: Option<String>,
    word: Option<String>,
    nominal_rate: f64,
}

impl Trial {
    /// Validates and wraps a sample sequence.
    pub fn new(samples: Vec<MotionSample>) -> Result<Self> {
        if samples.len() < MIN_TRIAL_LEN {
            return Err(Error::TooShort {
                len: samples.len(),
                min: MIN_TRIAL_LEN,
            });
        }
        for (i, s) in samples.iter().enumerate() {
            s.check().map_err(|m| Error::domain(format!("sample {i}: {m}")))?;
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(Error::NonIncreasingTime {
                    index: i,
                    t: s.t,
                    previous: samples[i - 1].t,
                });
            }
        }
        Ok(Self {
            samples,
            user: None,
            word: None,
            nominal_rate: DEFAULT_RATE,
        })
    }

    /// Builds a trial from six equal-length channels sampled at `rate` Hz
    /// starting at t = 0.
    pub fn from_channels(channels: &[Vec<f64>; DIMENSIONS], rate: f64) -> Result<Self> {
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::domain("channels differ in length"));
        }
        let samples = (0..len)
            .map(|i| {
                let mut motion = [0.0; DIMENSIONS];
                for (k, m) in motion.iter_mut().enumerate() {
                    *m = channels[k][i];
                }
                MotionSample::new(i as f64 / rate, motion)
            })
            .collect();
        Trial::new(samples)?.with_rate(rate)
    }

    pub fn with_user(mut self, user: impl Into<String>) -> Result<Self> {
        self.user = Some(check_label("user", user.into())?);
        Ok(self)
    }

    pub fn with_word(mut self, word: impl Into<String>) -> Result<Self> {
        self.word = Some(check_label("word", word.into())?);
        Ok(self)
    }

    pub fn with_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(format!("sample rate {rate} must be positive")));
        }
        self.nominal_rate = rate;
        Ok(self)
    }

    pub fn samples(&self) -> &[MotionSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false: a valid trial holds at least `MIN_TRIAL_LEN` samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn user(&self) -> Option<&str> {
        self.user.as_deref()
    }

    pub fn word(&self) -> Option<&str> {
        self.word.as_deref()
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    /// The `k`-th motion dimension, 1-based (1 = ax, ..., 6 = gz).
    pub fn channel(&self, k: usize) -> Result<Channel> {
        if !(1..=DIMENSIONS).contains(&k) {
            return Err(Error::domain(format!(
                "dimension index {k} outside 1..={DIMENSIONS}"
            )));
        }
        Ok(Channel(self.samples.iter().map(|s| s.motion[k - 1]).collect()))
    }

    /// All six channels in declared order.
    pub fn channels(&self) -> [Vec<f64>; DIMENSIONS] {
        std::array::from_fn(|k| self.samples.iter().map(|s| s.motion[k]).collect())
    }

    /// Replaces the channel values, keeping timestamps and labels.
    pub fn replace_channels(&self, channels: [Vec<f64>; DIMENSIONS]) -> Result<Trial> {
        if channels.iter().any(|c| c.len() != self.len()) {
            return Err(Error::domain("replacement channel length differs from trial"));
        }
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| MotionSample::new(s.t, std::array::from_fn(|k| channels[k][i])))
            .collect();
        let mut out = Trial::new(samples)?;
        out.user = self.user.clone();
        out.word = self.word.clone();
        out.nominal_rate = self.nominal_rate;
        Ok(out)
    }
}

fn check_label(key: &str, value: String) -> Result<String> {
    if value.chars().any(char::is_control) {
        return Err(Error::domain(format!("{key} label contains control characters")));
    }
    if value.trim() != value {
        return Err(Error::domain(format!(
            "{key} label has leading or trailing whitespace"
        )));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialFormat {
    Csv,
    Jsonl,
}

impl TrialFormat {
    /// `.jsonl` selects JSONL; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") => TrialFormat::Jsonl,
            _ => TrialFormat::Csv,
        }
    }
}

impl FromStr for TrialFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TrialFormat::Csv),
            "jsonl" => Ok(TrialFormat::Jsonl),
            other => Err(Error::domain(format!("unknown trial format {other:?}"))),
        }
    }
}

pub fn parse_trial(input: &[u8], format: TrialFormat) -> Result<Trial> {
    let text = decode_utf8(input)?;
    match format {
        TrialFormat::Csv => parse_csv(text),
        TrialFormat::Jsonl => parse_jsonl(text),
    }
}

pub fn write_trial(trial: &Trial, format: TrialFormat) -> String {
    match format {
        TrialFormat::Csv => write_csv(trial),
        TrialFormat::Jsonl => write_jsonl(trial),
    }
}

pub fn read_trial(path: &Path) -> Result<Trial> {
    let bytes = std::fs::read(path)?;
    parse_trial(&bytes, TrialFormat::from_path(path))
}

pub fn write_trial_file(path: &Path, trial: &Trial) -> Result<()> {
    std::fs::write(path, write_trial(trial, TrialFormat::from_path(path)))?;
    Ok(())
}

fn decode_utf8(input: &[u8]) -> Result<&str> {
    std::str::from_utf8(input).map_err(|e| {
        let line = 1 + input[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        Error::parse(line, "invalid UTF-8")
    })
}

#[derive(Default)]
struct Metadata {
    user: Option<String>,
    word: Option<String>,
    rate: Option<f64>,
}

impl Metadata {
    fn apply(self, mut trial: Trial, line: usize) -> Result<Trial> {
        let relabel = |e: Error| match e {
            Error::Domain(m) => Error::parse(line, m),
            other => other,
        };
        if let Some(u) = self.user {
            trial = trial.with_user(u).map_err(relabel)?;
        }
        if let Some(w) = self.word {
            trial = trial.with_word(w).map_err(relabel)?;
        }
        if let Some(r) = self.rate {
            trial = trial.with_rate(r).map_err(relabel)?;
        }
        Ok(trial)
    }
}

fn parse_rate(value: &str, line: usize) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|r| r.is_finite() && *r > 0.0)
        .ok_or_else(|| Error::parse(line, format!("invalid rate {value:?}")))
}

fn parse_csv(text: &str) -> Result<Trial> {
    let mut meta = Metadata::default();
    let mut header_seen = false;
    let mut samples = Vec::new();
    // Line the metadata errors are reported at; the header is a good anchor.
    let mut last_line = 1;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "user" => meta.user = Some(value.to_owned()),
                    "word" => meta.word = Some(value.to_owned()),
                    "rate" => meta.rate = Some(parse_rate(value, line_no)?),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER {
                return Err(Error::parse(
                    line_no,
                    format!("expected header `{CSV_HEADER}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let mut values = [0.0; 1 + DIMENSIONS];
        let mut fields = line.split(',');
        for (col, slot) in values.iter_mut().enumerate() {
            let field = fields
                .next()
                .ok_or_else(|| Error::parse(line_no, format!("expected 7 fields, found {col}")))?
                .trim();
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(line_no, format!("cannot parse {field:?} as a number"))
            })?;
            *slot = v;
        }
        if fields.next().is_some() {
            return Err(Error::parse(line_no, "more than 7 fields"));
        }
        let sample = MotionSample::new(values[0], std::array::from_fn(|k| values[k + 1]));
        sample.check().map_err(|m| Error::parse(line_no, m))?;
        samples.push(sample);
    }
    if !header_seen {
        return Err(Error::parse(last_line, "missing header line"));
    }
    meta.apply(Trial::new(samples)?, 1)
}

fn parse_jsonl(text: &str) -> Result<Trial> {
    let mut meta = Metadata::default();
    let mut samples = Vec::new();

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(Error::parse(line_no, "expected a JSON object"));
        };
        if obj.contains_key("t") {
            let sample = jsonl_sample(&obj, line_no)?;
            sample.check().map_err(|m| Error::parse(line_no, m))?;
            samples.push(sample);
        } else if samples.is_empty() {
            for (key, v) in &obj {
                match (key.as_str(), v) {
                    ("user", Value::String(s)) => meta.user = Some(s.clone()),
                    ("word", Value::String(s)) => meta.word = Some(s.clone()),
                    ("rate", Value::Number(n)) => {
                        meta.rate = Some(parse_rate(&n.to_string(), line_no)?)
                    }
                    ("user" | "word" | "rate", _) => {
                        return Err(Error::parse(line_no, format!("metadata {key:?} has wrong type")))
                    }
                    _ => return Err(Error::parse(line_no, format!("unknown metadata key {key:?}"))),
                }
            }
        } else {
            return Err(Error::parse(line_no, "metadata object after the first sample"));
        }
    }
    meta.apply(Trial::new(samples)?, 1)
}

fn jsonl_sample(obj: &Map<String, Value>, line_no: usize) -> Result<MotionSample> {
    if obj.len() != 1 + DIMENSIONS {
        return Err(Error::parse(
            line_no,
            format!("expected keys {CSV_HEADER}, found {} keys", obj.len()),
        ));
    }
    let get = |key: &str| -> Result<f64> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::parse(line_no, format!("missing or non-numeric {key:?}")))
    };
    let t = get("t")?;
    let mut motion = [0.0; DIMENSIONS];
    for (k, m) in motion.iter_mut().enumerate() {
        *m = get(CHANNEL_NAMES[k])?;
    }
    Ok(MotionSample::new(t, motion))
}

fn write_csv(trial: &Trial) -> String {
    let mut out = String::with_capacity(trial.len() * 64);
    if let Some(u) = trial.user() {
        let _ = writeln!(out, "# user={u}");
    }
    if let Some(w) = trial.word() {
        let _ = writeln!(out, "# word={w}");
    }
    if trial.nominal_rate() != DEFAULT_RATE {
        let _ = writeln!(out, "# rate={}", trial.nominal_rate());
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in trial.samples() {
        let _ = write!(out, "{}", s.t);
        for v in s.motion {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn write_jsonl(trial: &Trial) -> String {
    let mut out = String::with_capacity(trial.len() * 96);
    let mut meta = Map::new();
    if let Some(u) = trial.user() {
        meta.insert("user".into(), Value::from(u));
    }
    if let Some(w) = trial.word() {
        meta.insert("word".into(), Value::from(w));
    }
    if trial.nominal_rate() != DEFAULT_RATE {
        meta.insert("rate".into(), Value::from(trial.nominal_rate()));
    }
    if !meta.is_empty() {
        out.push_str(&Value::Object(meta).to_string());
        out.push('\n');
    }
    for s in trial.samples() {
        let mut obj = Map::new();
        obj.insert("t".into(), Value::from(s.t));
        for (k, v) in s.motion.iter().enumerate() {
            obj.insert(CHANNEL_NAMES[k].into(), Value::from(*v));
        }
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }
    out
}
