#![no_main]

use libfuzzer_sys::fuzz_target;
use wristsign::Profile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(profile) = Profile::from_toml_str(text) {
        let written = profile.to_toml_string().expect("valid profiles serialize");
        assert_eq!(Profile::from_toml_str(&written).expect("round trip"), profile);
    }
});
