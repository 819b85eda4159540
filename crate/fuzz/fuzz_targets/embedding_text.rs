//! Plain-text embedding tables.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((names, rows)) = kgcache::skipgram::parse_embedding_text(text, "fuzz") {
        assert_eq!(names.len(), rows.len());
    }
});
