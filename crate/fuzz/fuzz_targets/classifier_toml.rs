#![no_main]

use libfuzzer_sys::fuzz_target;
use wristsign::baseline::ClosedSetClassifier;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = ClosedSetClassifier::from_toml_str(text) {
        let width = model.standardizer.mean.len();
        let label = model.predict(&vec![0.5; width]);
        assert!(model.classes.iter().any(|c| c == label));
    }
});
