//! Triple-file lines in both column orders.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for line in text.lines() {
        for order in [
            kgcache::data::ColumnOrder::Hrt,
            kgcache::data::ColumnOrder::Htr,
        ] {
            if let Ok(Some(fields)) = kgcache::data::parse_triple_line(line, order) {
                assert!(fields.iter().all(|f| !f.is_empty()));
            }
        }
    }
});
