use wristsign::baseline::{train_closed_set, ClassifierOptions, LabeledFeatures};
use wristsign::dataset::{generate, load_dataset, write_dataset, SynthConfig};
use wristsign::dsp::filter_trial;
use wristsign::eval::{discrimination, rates_at};
use wristsign::profile::distance_to_group;
use wristsign::synth::{gen_bad_trial, gen_trial, gen_user};
use wristsign::{authenticate, train, TrainOptions};

fn users_only(users: usize) -> SynthConfig {
    SynthConfig {
        users,
        attack: None,
        fault: None,
        words: None,
        ..SynthConfig::default()
    }
}

#[test]
fn harness_rates_agree_with_authenticator_decisions() {
    let ds = generate(&users_only(4)).unwrap();
    let options = TrainOptions {
        threshold: 0.3,
        ..TrainOptions::default()
    };
    let (report, scores) = discrimination(&ds.users, options).unwrap();
    let profile = train(&ds.users[0].enroll, options).unwrap();
    let genuine: Vec<_> = ds.users[0].genuine.iter().map(|t| authenticate(t, &profile).unwrap()).collect();
    let impostor: Vec<_> = ds.users[1..]
        .iter()
        .flat_map(|u| &u.genuine)
        .map(|t| authenticate(t, &profile).unwrap())
        .collect();
    let tss = |v: &[wristsign::ScoreReport]| v.iter().map(|r| r.tss).collect::<Vec<_>>();
    let rates = rates_at(&tss(&genuine), &tss(&impostor), options.threshold).unwrap();
    let denied = genuine.iter().filter(|r| !r.accepted()).count() as f64 / genuine.len() as f64;
    let accepted = impostor.iter().filter(|r| r.accepted()).count() as f64 / impostor.len() as f64;
    assert_eq!(rates.fnr, denied);
    assert_eq!(rates.fpr, accepted);
    assert_eq!((report.per_user[0].fnr, report.per_user[0].fpr), (rates.fnr, rates.fpr));
    assert_eq!(scores.genuine.len(), 4 * 10);
    assert_eq!(scores.impostor.len(), 4 * 30);
}

#[test]
fn same_writer_scores_dominate_cross_writer_scores() {
    let ds = generate(&users_only(15)).unwrap();
    let (_, scores) = discrimination(&ds.users, TrainOptions::default()).unwrap();
    let (g, i) = (scores.genuine_tss(), scores.impostor_tss());
    let survival = |v: &[f64], t: f64| v.iter().filter(|&&x| x >= t).count() as f64 / v.len() as f64;
    for t in (0..=100).map(|k| f64::from(k) / 100.0) {
        assert!(survival(&g, t) >= survival(&i, t), "t = {t}");
    }
}

#[test]
fn enrollment_replay_is_accepted_and_other_writers_mostly_denied() {
    let ds = generate(&users_only(6)).unwrap();
    let profile = train(&ds.users[0].enroll, TrainOptions::default()).unwrap();
    for t in &ds.users[0].enroll {
        assert!(authenticate(t, &profile).unwrap().accepted());
    }
    let others: Vec<_> = ds.users[1..].iter().flat_map(|u| &u.genuine).collect();
    let denied = others.iter().filter(|t| !authenticate(t, &profile).unwrap().accepted()).count();
    assert!(denied as f64 >= 0.9 * others.len() as f64);
}

#[test]
fn bad_trials_sit_outside_the_clean_group() {
    let mut exceed_total = 0usize;
    let runs = 8;
    for seed in 0..runs {
        let style = gen_user(100 + seed);
        let clean: Vec<_> = (0..10).map(|i| gen_trial(&style, i)).collect();
        let profile = train(&clean, TrainOptions::default()).unwrap();
        for j in 0..5 {
            let bad = filter_trial(&gen_bad_trial(&style, 1000 + j)).unwrap();
            let s = distance_to_group(&bad, &profile).unwrap();
            exceed_total += (0..6).filter(|&k| s.0[k] > profile.ideal().0[k]).count();
        }
    }
    let mean = exceed_total as f64 / (runs as f64 * 5.0);
    assert!(mean >= 5.0, "bad trials exceed e in {mean} of 6 dimensions on average");
}

#[test]
fn datasets_survive_the_disk_round_trip() {
    let cfg = SynthConfig {
        users: 3,
        enroll: 2,
        genuine: 2,
        ..SynthConfig::default()
    };
    let ds = generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&ds, dir.path()).unwrap();
    assert_eq!(load_dataset(&manifest).unwrap(), ds);
}

#[test]
fn closed_set_classifier_always_answers() {
    let classes: Vec<LabeledFeatures> = (0..3)
        .map(|c| LabeledFeatures {
            label: format!("c{c}"),
            rows: (0..6).map(|i| vec![c as f64 + 0.1 * i as f64, (c * i) as f64]).collect(),
        })
        .collect();
    let model = train_closed_set(&classes, ClassifierOptions::default()).unwrap();
    for probe in [vec![1e6, -1e6], vec![0.0, 0.0], vec![-42.0, 7.5]] {
        assert!(model.classes.iter().any(|c| c == model.predict(&probe)));
    }
}
