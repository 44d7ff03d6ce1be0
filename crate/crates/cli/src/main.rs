use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wristsign::auth::{
    calibrate_weights, columns, parse_scores, BALANCED_THRESHOLD, HARDENED_THRESHOLD, SCORE_HEADER,
};
use wristsign::dataset::{generate, load_dataset, write_dataset};
use wristsign::dsp::SgConfig;
use wristsign::experiment::{run_baseline, run_evaluation};
use wristsign::profile::{check_threshold, DEFAULT_THRESHOLD};
use wristsign::signal::{read_trial, DIMENSIONS};
use wristsign::{authenticate, train, DimensionWeights, Profile, Trial, TrainOptions};

mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "wristsign", version, about = "Wrist-motion signature enrollment, verification and experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed for generation and seeded baselines.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Acceptance threshold δ in (0, 1].
    #[arg(long, global = true, conflicts_with = "preset")]
    delta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Savitzky-Golay window length (odd).
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Savitzky-Golay polynomial degree.
    #[arg(long, global = true)]
    degree: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// δ = 0.55
    #[value(name = "default", alias = "paper-default")]
    Standard,
    /// δ = 0.65, for deployments facing mimicry
    Hardened,
    /// δ = 0.62, with calibrated weights
    Balanced,
}

impl Preset {
    fn threshold(self) -> f64 {
        match self {
            Preset::Standard => DEFAULT_THRESHOLD,
            Preset::Hardened => HARDENED_THRESHOLD,
            Preset::Balanced => BALANCED_THRESHOLD,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a profile from enrollment trials.
    Enroll {
        #[arg(required = true)]
        trials: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        /// Six comma-separated dimension weights summing to 1.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Score a probe against a profile. Exit 0 on accept, 1 on deny.
    Verify {
        probe: PathBuf,
        #[arg(long, short)]
        profile: PathBuf,
    },
    /// Derive dimension weights from genuine and impostor probes or score files.
    Calibrate {
        #[arg(long)]
        genuine: PathBuf,
        #[arg(long)]
        impostor: PathBuf,
        #[arg(long, short)]
        profile: PathBuf,
        /// Write the calibrated profile here instead of in place.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the discrimination, attack and fault experiments on a dataset.
    Evaluate {
        manifest: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// ROC points CSV.
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        /// Write into a non-empty directory.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        users: Option<usize>,
    },
    /// Closed-set classifier contrast and the open-set comparison.
    Baseline {
        manifest: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Feature matrix CSV.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Trained classifier (TOML).
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

type CmdResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    let g = &cli.global;
    if let Some(seed) = g.seed {
        cfg.seed = Some(seed);
    }
    if let Some(seed) = cfg.seed {
        cfg.synth.seed = seed;
        cfg.baseline.seed = seed;
    }
    let threshold_flag = g.delta.or(g.preset.map(Preset::threshold));
    if let Some(t) = threshold_flag {
        cfg.eval.threshold = t;
        cfg.baseline.threshold = t;
    }
    let filter = SgConfig {
        window: g.window.unwrap_or(cfg.eval.filter.window),
        degree: g.degree.unwrap_or(cfg.eval.filter.degree),
    };
    filter.validate().map_err(|e| e.to_string())?;
    cfg.eval.filter = filter;
    cfg.baseline.filter = filter;

    match cli.command {
        Command::Enroll {
            trials,
            out,
            weights,
        } => enroll(&cfg, &trials, &out, weights),
        Command::Verify { probe, profile } => verify(&probe, &profile, threshold_flag),
        Command::Calibrate {
            genuine,
            impostor,
            profile,
            out,
        } => calibrate(&genuine, &impostor, &profile, out.as_deref()),
        Command::Evaluate { manifest, out, roc } => evaluate(&cfg, &manifest, out.as_deref(), roc.as_deref()),
        Command::Synth { out, force, users } => {
            if let Some(u) = users {
                cfg.synth.users = u;
            }
            synth(&cfg, &out, force)
        }
        Command::Baseline {
            manifest,
            out,
            features,
            model,
        } => baseline(&cfg, &manifest, out.as_deref(), features.as_deref(), model.as_deref()),
    }
}

fn err_at(path: &Path) -> impl Fn(wristsign::Error) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn load_trial(path: &Path) -> Result<Trial, String> {
    read_trial(path).map_err(err_at(path))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EnrollSummary<'a> {
    profile: String,
    n: usize,
    ideal: [f64; DIMENSIONS],
    threshold: f64,
    weights: &'a DimensionWeights,
    filter: SgConfig,
    trials: Vec<String>,
}

fn enroll(cfg: &RunConfig, trials: &[PathBuf], out: &Path, weights: Option<Vec<f64>>) -> CmdResult {
    if trials.len() < 2 {
        return Err(format!("need at least 2 enrollment trials, got {}", trials.len()));
    }
    let loaded = trials.iter().map(|p| load_trial(p)).collect::<Result<Vec<_>, _>>()?;
    let weights = match weights {
        Some(w) => DimensionWeights::try_from(w).map_err(|e| format!("--weights: {e}"))?,
        None => cfg.eval.weights,
    };
    let options = TrainOptions {
        weights,
        threshold: check_threshold(cfg.eval.threshold).map_err(|e| e.to_string())?,
        filter: cfg.eval.filter,
    };
    let profile = train(&loaded, options).map_err(|e| e.to_string())?;
    profile.save(out).map_err(err_at(out))?;
    print!(
        "{}",
        json(&EnrollSummary {
            profile: out.display().to_string(),
            n: profile.group_size(),
            ideal: *profile.ideal().as_array(),
            threshold: profile.threshold(),
            weights: profile.weights(),
            filter: profile.filter(),
            trials: trials.iter().map(|p| p.display().to_string()).collect(),
        })?
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(probe: &Path, profile_path: &Path, threshold: Option<f64>) -> CmdResult {
    let mut profile = Profile::load(profile_path).map_err(err_at(profile_path))?;
    if let Some(t) = threshold {
        profile = profile.with_threshold(t).map_err(|e| e.to_string())?;
    }
    let trial = load_trial(probe)?;
    let report = authenticate(&trial, &profile).map_err(err_at(probe))?;
    println!("{}", serde_json::to_string(&report).map_err(|e| e.to_string())?);
    Ok(if report.accepted() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn is_score_file(path: &Path) -> Result<bool, String> {
    if path.extension().and_then(|e| e.to_str()) != Some("csv") {
        return Ok(false);
    }
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        == Some(SCORE_HEADER))
}

/// Similarity-score rows for every trial or score file in `dir`.
fn score_dir(dir: &Path, profile: &Profile) -> Result<Vec<[f64; DIMENSIONS]>, String> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "jsonl")))
        .collect();
    entries.sort();
    let mut rows = Vec::new();
    for path in &entries {
        if is_score_file(path)? {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            rows.extend(parse_scores(&text).map_err(err_at(path))?);
        } else {
            let trial = load_trial(path)?;
            rows.push(authenticate(&trial, profile).map_err(err_at(path))?.ss);
        }
    }
    if rows.is_empty() {
        return Err(format!("{}: no trial or score files", dir.display()));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CalibrationSummary<'a> {
    profile: String,
    genuine_probes: usize,
    impostor_probes: usize,
    #[serde(flatten)]
    calibration: &'a wristsign::auth::Calibration,
}

fn calibrate(genuine: &Path, impostor: &Path, profile_path: &Path, out: Option<&Path>) -> CmdResult {
    let profile = Profile::load(profile_path).map_err(err_at(profile_path))?;
    let g = score_dir(genuine, &profile)?;
    let i = score_dir(impostor, &profile)?;
    let cal = calibrate_weights(&columns(&g), &columns(&i)).map_err(|e| e.to_string())?;
    if cal.uniform_fallback {
        eprintln!("warning: no dimension has AUC above 0.85; using uniform weights");
    }
    let target = out.unwrap_or(profile_path);
    profile.with_weights(cal.weights).save(target).map_err(err_at(target))?;
    print!(
        "{}",
        json(&CalibrationSummary {
            profile: target.display().to_string(),
            genuine_probes: g.len(),
            impostor_probes: i.len(),
            calibration: &cal,
        })?
    );
    Ok(ExitCode::SUCCESS)
}

fn evaluate(cfg: &RunConfig, manifest: &Path, out: Option<&Path>, roc: Option<&Path>) -> CmdResult {
    let dataset = load_dataset(manifest).map_err(err_at(manifest))?;
    let report = run_evaluation(&dataset, &cfg.eval).map_err(|e| e.to_string())?;
    emit(&report.to_json_string().map_err(|e| e.to_string())?, out)?;
    if let Some(path) = roc {
        std::fs::write(path, report.discrimination.roc.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(cfg: &RunConfig, out: &Path, force: bool) -> CmdResult {
    if !force {
        if let Ok(mut entries) = std::fs::read_dir(out) {
            if entries.next().is_some() {
                return Err(format!("{} is not empty (use --force to write into it)", out.display()));
            }
        }
    }
    let dataset = generate(&cfg.synth).map_err(|e| e.to_string())?;
    let manifest = write_dataset(&dataset, out).map_err(err_at(out))?;
    println!("{}", manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn baseline(
    cfg: &RunConfig,
    manifest: &Path,
    out: Option<&Path>,
    features: Option<&Path>,
    model: Option<&Path>,
) -> CmdResult {
    let dataset = load_dataset(manifest).map_err(err_at(manifest))?;
    let words = dataset
        .words
        .as_ref()
        .ok_or_else(|| format!("{}: manifest has no [words] section", manifest.display()))?;
    let run = run_baseline(words, &cfg.baseline).map_err(|e| e.to_string())?;
    emit(&run.report.to_json_string().map_err(|e| e.to_string())?, out)?;
    if let Some(path) = features {
        std::fs::write(path, wristsign::baseline::features_to_csv(&run.features, true))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = model {
        run.classifier.save(path).map_err(err_at(path))?;
    }
    Ok(ExitCode::SUCCESS)
}
