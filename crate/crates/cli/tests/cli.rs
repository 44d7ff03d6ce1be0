use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wristsign::auth::{write_scores, SCORE_HEADER};

const SMALL: &str = r#"
[synth]
users = 4
enroll = 5
genuine = 3

[synth.attack]
enroll = 5
genuine = 2
attackers = 2
trials_per_attacker = 2

[synth.fault]
clean = 4
bad = 4
test_genuine = 3
test_bad = 3
fractions = [0.0, 0.5]

[synth.words]
classes = 3
samples = 10
enroll = 4
unseen_words = 2
unseen_samples = 3

[baseline]
folds = 2
"#;

fn wristsign(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wristsign"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn wristsign")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// A temp dir holding `small.toml` and a generated dataset in `ds/`.
fn small_dataset() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = wristsign(&["--config", "small.toml", "synth", "--out", "ds"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir
}

fn trials(dir: &Path, user: &str, kind: &str) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir.join("ds/users").join(user))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with(kind))
        .map(|n| format!("ds/users/{user}/{n}"))
        .collect();
    v.sort();
    v
}

fn enroll(dir: &Path, user: &str, profile: &str) {
    let mut args = vec!["enroll".to_owned()];
    args.extend(trials(dir, user, "enroll"));
    args.extend(["--out".to_owned(), profile.to_owned()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = wristsign(&refs, dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn files_under(root: &Path) -> BTreeSet<PathBuf> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out
}

#[test]
fn enroll_writes_profile_and_summary() {
    let dir = small_dataset();
    enroll(dir.path(), "u00", "p.toml");
    assert!(dir.path().join("p.toml").exists());
    let out = wristsign(&["enroll", "ds/users/u00/enroll-00.csv", "ds/users/u00/enroll-01.csv", "-o", "q.toml"], dir.path());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["n"], 2);
    assert_eq!(summary["threshold"], 0.55);
    assert_eq!(summary["weights"].as_array().unwrap().len(), 6);
}

#[test]
fn enroll_rejects_single_trial_and_corrupt_files() {
    let dir = small_dataset();
    let out = wristsign(&["enroll", "ds/users/u00/enroll-00.csv", "--out", "p.toml"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("p.toml").exists());

    std::fs::write(dir.path().join("broken.csv"), "t,ax,ay,az,gx,gy,gz\n0,1,2\n").unwrap();
    let out = wristsign(
        &["enroll", "ds/users/u00/enroll-00.csv", "broken.csv", "ds/users/u00/enroll-01.csv", "--out", "p.toml"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("broken.csv"), "{}", stderr(&out));
}

#[test]
fn verify_exit_codes() {
    let dir = small_dataset();
    enroll(dir.path(), "u00", "p.toml");
    let replay = wristsign(&["verify", "ds/users/u00/enroll-02.csv", "-p", "p.toml"], dir.path());
    assert_eq!(code(&replay), 0, "{}", stdout(&replay));
    let report: serde_json::Value = serde_json::from_str(&stdout(&replay)).unwrap();
    assert_eq!(report["decision"], "accept");
    assert_eq!(report["ss"].as_array().unwrap().len(), 6);

    let mut denied = 0;
    let mut total = 0;
    for user in ["u01", "u02", "u03"] {
        for probe in trials(dir.path(), user, "genuine") {
            total += 1;
            let out = wristsign(&["verify", &probe, "-p", "p.toml"], dir.path());
            match code(&out) {
                1 => denied += 1,
                0 => {}
                other => panic!("unexpected exit {other}: {}", stderr(&out)),
            }
        }
    }
    assert!(denied as f64 >= 0.9 * total as f64, "{denied}/{total}");

    assert_eq!(code(&wristsign(&["verify", "missing.csv", "-p", "p.toml"], dir.path())), 2);
    std::fs::write(dir.path().join("junk.toml"), "format = 3").unwrap();
    assert_eq!(
        code(&wristsign(&["verify", "ds/users/u00/enroll-02.csv", "-p", "junk.toml"], dir.path())),
        2
    );
}

#[test]
fn verify_threshold_flags_override_profile() {
    let dir = small_dataset();
    enroll(dir.path(), "u00", "p.toml");
    let out = wristsign(&["--preset", "hardened", "verify", "ds/users/u01/genuine-00.csv", "-p", "p.toml"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["threshold"], 0.65);
    for name in ["default", "paper-default"] {
        let out = wristsign(&["--preset", name, "verify", "ds/users/u01/genuine-00.csv", "-p", "p.toml"], dir.path());
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(report["threshold"], 0.55);
    }
    let out = wristsign(&["--preset", "balanced", "verify", "ds/users/u01/genuine-00.csv", "-p", "p.toml"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["threshold"], 0.62);
    let out = wristsign(&["--delta", "1.5", "verify", "ds/users/u01/genuine-00.csv", "-p", "p.toml"], dir.path());
    assert_eq!(code(&out), 2);
    let out = wristsign(&["--delta", "0.6", "--preset", "balanced", "verify", "x.csv", "-p", "p.toml"], dir.path());
    assert_eq!(code(&out), 2);
}

/// 100 genuine and 100 impostor scores per dimension whose pair-counting AUC
/// is exactly `a[k]` (to four decimals).
fn score_sets_with_auc(a: [f64; 6]) -> (Vec<[f64; 6]>, Vec<[f64; 6]>) {
    let impostor: Vec<[f64; 6]> = (0..100).map(|j| [(j as f64 + 0.5) / 100.0; 6]).collect();
    let mut genuine = vec![[0.0; 6]; 100];
    for k in 0..6 {
        let pairs = (a[k] * 10_000.0).round() as usize;
        for (i, row) in genuine.iter_mut().enumerate() {
            // Impostors below this genuine score; the counts sum to `pairs`.
            let below = pairs / 100 + usize::from(i < pairs % 100);
            row[k] = below as f64 / 100.0;
        }
    }
    (genuine, impostor)
}

#[test]
fn calibrate_reproduces_reference_weights_from_score_files() {
    let dir = small_dataset();
    enroll(dir.path(), "u00", "p.toml");
    let a = [0.8556, 0.9130, 0.9985, 0.9839, 0.9851, 0.8682];
    let (g, i) = score_sets_with_auc(a);
    for (name, rows) in [("gen", &g), ("imp", &i)] {
        std::fs::create_dir(dir.path().join(name)).unwrap();
        std::fs::write(dir.path().join(name).join("scores.csv"), write_scores(rows)).unwrap();
    }
    let out = wristsign(&["calibrate", "--genuine", "gen", "--impostor", "imp", "-p", "p.toml", "-o", "cal.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let expected = [0.0111, 0.1249, 0.2945, 0.2655, 0.2679, 0.0361];
    for k in 0..6 {
        assert!((summary["auc"][k].as_f64().unwrap() - a[k]).abs() < 1e-12);
        let mu = summary["weights"][k].as_f64().unwrap();
        assert!((mu - expected[k]).abs() < 5e-4, "{mu} vs {}", expected[k]);
    }
    assert_eq!(summary["uniform_fallback"], false);
    let cal = wristsign::Profile::load(&dir.path().join("cal.toml")).unwrap();
    assert!((cal.weights().as_array()[2] - 0.2945).abs() < 5e-4);
}

#[test]
fn calibrate_falls_back_to_uniform_and_is_idempotent() {
    let dir = small_dataset();
    enroll(dir.path(), "u00", "p.toml");
    let rows = vec![[0.5; 6]; 4];
    for name in ["gen", "imp"] {
        std::fs::create_dir(dir.path().join(name)).unwrap();
        std::fs::write(dir.path().join(name).join("s.csv"), write_scores(&rows)).unwrap();
    }
    let out = wristsign(&["calibrate", "--genuine", "gen", "--impostor", "imp", "-p", "p.toml"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["uniform_fallback"], true);

    // Trial directories scored against the profile.
    std::fs::create_dir(dir.path().join("g2")).unwrap();
    std::fs::create_dir(dir.path().join("i2")).unwrap();
    for p in trials(dir.path(), "u00", "genuine") {
        std::fs::copy(dir.path().join(&p), dir.path().join("g2").join(Path::new(&p).file_name().unwrap())).unwrap();
    }
    for (n, p) in trials(dir.path(), "u01", "genuine").iter().enumerate() {
        std::fs::copy(dir.path().join(p), dir.path().join("i2").join(format!("{n}.csv"))).unwrap();
    }
    let first = wristsign(&["calibrate", "--genuine", "g2", "--impostor", "i2", "-p", "p.toml"], dir.path());
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let after_first = std::fs::read_to_string(dir.path().join("p.toml")).unwrap();
    let second = wristsign(&["calibrate", "--genuine", "g2", "--impostor", "i2", "-p", "p.toml"], dir.path());
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(after_first, std::fs::read_to_string(dir.path().join("p.toml")).unwrap());
}

#[test]
fn calibrate_rejects_empty_directories() {
    let dir = small_dataset();
    enroll(dir.path(), "u00", "p.toml");
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    std::fs::create_dir(dir.path().join("gen")).unwrap();
    std::fs::write(dir.path().join("gen/s.csv"), format!("{SCORE_HEADER}\n1,1,1,1,1,1\n")).unwrap();
    let out = wristsign(&["calibrate", "--genuine", "gen", "--impostor", "empty", "-p", "p.toml"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn evaluate_report_schema_and_determinism() {
    let dir = small_dataset();
    let a = wristsign(&["--seed", "7", "evaluate", "ds/manifest.toml", "--out", "a.json", "--roc", "roc.csv"], dir.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = wristsign(&["--seed", "7", "evaluate", "ds/manifest.toml", "--out", "b.json"], dir.path());
    assert_eq!(code(&b), 0);
    let ra = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(ra, std::fs::read(dir.path().join("b.json")).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    let disc = &report["discrimination"];
    for key in ["auc_total", "fnr", "fpr"] {
        assert!(disc[key].is_number(), "{key}");
    }
    assert_eq!(report["seed"], 42);
    assert_eq!(report["config"]["threshold"], 0.55);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(report["attack"]["scenarios"].as_array().unwrap().len(), 3);
    assert_eq!(report["fault_tolerance"]["points"].as_array().unwrap().len(), 2);
    let roc = std::fs::read_to_string(dir.path().join("roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr,threshold\n0,0,inf\n"), "{roc}");
}

#[test]
fn evaluate_preset_and_config_precedence() {
    let dir = small_dataset();
    let out = wristsign(&["--preset", "hardened", "evaluate", "ds/manifest.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["config"]["threshold"], 0.65);
    assert_eq!(report["discrimination"]["threshold"], 0.65);

    std::fs::write(dir.path().join("run.toml"), "[eval]\nthreshold = 0.6\n").unwrap();
    let from_file = wristsign(&["--config", "run.toml", "evaluate", "ds/manifest.toml"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(report["config"]["threshold"], 0.6);
    let flag = wristsign(&["--config", "run.toml", "--delta", "0.7", "evaluate", "ds/manifest.toml"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&flag)).unwrap();
    assert_eq!(report["config"]["threshold"], 0.7);
    assert_ne!(
        serde_json::from_str::<serde_json::Value>(&stdout(&from_file)).unwrap()["config_hash"],
        report["config_hash"]
    );
}

#[test]
fn evaluate_rejects_bad_manifests() {
    let dir = small_dataset();
    std::fs::write(dir.path().join("bad.toml"), "format = \"wristsign-manifest\"\nversion = 1\nusers = 3\n").unwrap();
    assert_eq!(code(&wristsign(&["evaluate", "bad.toml"], dir.path())), 2);
    std::fs::write(dir.path().join("typo.toml"), "[eval]\nthreshhold = 0.6\n").unwrap();
    assert_eq!(
        code(&wristsign(&["--config", "typo.toml", "evaluate", "ds/manifest.toml"], dir.path())),
        2
    );
    std::fs::remove_file(dir.path().join("ds/users/u01/genuine-00.csv")).unwrap();
    let out = wristsign(&["evaluate", "ds/manifest.toml"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("genuine-00.csv"), "{}", stderr(&out));
}

#[test]
fn synth_is_deterministic_complete_and_guarded() {
    let dir = small_dataset();
    let again = wristsign(&["--config", "small.toml", "synth", "--out", "ds2"], dir.path());
    assert_eq!(code(&again), 0);
    let (a, b) = (dir.path().join("ds"), dir.path().join("ds2"));
    let files = files_under(&a);
    assert_eq!(files, files_under(&b));
    for f in &files {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f:?}");
    }

    let manifest =
        wristsign::dataset::Manifest::from_toml_str(&std::fs::read_to_string(a.join("manifest.toml")).unwrap()).unwrap();
    let listed: BTreeSet<PathBuf> = manifest.files().into_iter().map(PathBuf::from).collect();
    let mut on_disk = files.clone();
    on_disk.remove(Path::new("manifest.toml"));
    assert_eq!(listed, on_disk);

    let refused = wristsign(&["--config", "small.toml", "synth", "--out", "ds"], dir.path());
    assert_eq!(code(&refused), 2);
    let forced = wristsign(&["--config", "small.toml", "synth", "--out", "ds", "--force"], dir.path());
    assert_eq!(code(&forced), 0);

    let other_seed = wristsign(&["--config", "small.toml", "--seed", "9", "synth", "--out", "ds3"], dir.path());
    assert_eq!(code(&other_seed), 0);
    let f = Path::new("users/u00/enroll-00.csv");
    assert_ne!(std::fs::read(a.join(f)).unwrap(), std::fs::read(dir.path().join("ds3").join(f)).unwrap());
}

#[test]
fn baseline_runs_and_is_deterministic() {
    let dir = small_dataset();
    let args = ["--config", "small.toml", "baseline", "ds/manifest.toml", "--features", "f.csv", "--model", "m.toml"];
    let a = wristsign(&args, dir.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = wristsign(&args[..4], dir.path());
    assert_eq!(stdout(&a), stdout(&b));

    let report: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(report["classes"].as_array().unwrap().len(), 3);
    assert_eq!(report["cross_validation"][0]["features"], "core");
    let flaw = &report["flaw"];
    assert_eq!(flaw["classifier_labelled"], 1.0);
    let row = &flaw["rows"][0];
    assert!(row["classifier_label"].is_string());
    assert!(row["authenticator_denied"].is_boolean());
    let features = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert!(features.starts_with("label,ax_mean,"));
    assert_eq!(features.lines().count(), 1 + 30);
    let model = std::fs::read_to_string(dir.path().join("m.toml")).unwrap();
    assert!(wristsign::baseline::ClosedSetClassifier::from_toml_str(&model).is_ok());
}

#[test]
fn baseline_needs_word_classes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[synth]\nusers = 2\nenroll = 2\ngenuine = 1\n").unwrap();
    // Sections left at their defaults are generated; strip the words part by hand.
    let out = wristsign(&["--config", "c.toml", "synth", "--out", "ds"], dir.path());
    assert_eq!(code(&out), 0);
    let manifest = dir.path().join("ds/manifest.toml");
    let mut m = wristsign::dataset::Manifest::from_toml_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    m.words = None;
    std::fs::write(&manifest, toml::to_string(&m).unwrap()).unwrap();
    let out = wristsign(&["baseline", "ds/manifest.toml"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("words"));
}
