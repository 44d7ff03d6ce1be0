#![no_main]

use libfuzzer_sys::fuzz_target;
use wristsign::dataset::Manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(manifest) = Manifest::from_toml_str(text) {
            for path in manifest.files() {
                assert!(!std::path::Path::new(path).is_absolute());
            }
        }
    }
});
