//! Citation-network content files.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = kgcache::skipgram::parse_citation_content(text, "fuzz");
});
