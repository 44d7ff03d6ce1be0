#![no_main]

use libfuzzer_sys::fuzz_target;
use wristsign::signal::{parse_trial, write_trial, TrialFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(trial) = parse_trial(data, TrialFormat::Jsonl) {
        let text = write_trial(&trial, TrialFormat::Jsonl);
        let again = parse_trial(text.as_bytes(), TrialFormat::Jsonl).expect("written trials parse");
        assert_eq!(again, trial);
    }
});
