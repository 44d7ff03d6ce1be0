#![no_main]

use libfuzzer_sys::fuzz_target;
use wristsign::auth::{parse_scores, write_scores};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_scores(text) {
            assert_eq!(parse_scores(&write_scores(&rows)).expect("round trip"), rows);
        }
    }
});
