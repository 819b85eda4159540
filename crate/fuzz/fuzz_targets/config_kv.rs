//! `key = value` configuration files.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pairs) = kgcache::config::parse_kv(text, "fuzz") {
        assert_eq!(
            kgcache::config::parse_kv(&kgcache::config::to_kv_text(&pairs), "fuzz").unwrap(),
            pairs
        );
    }
});
