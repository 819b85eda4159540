//! Random-walk corpora.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let nodes = kgcache::data::Vocab::from_names(["a", "b", "c", "d"].map(String::from));
    if let Ok(walks) = kgcache::skipgram::parse_corpus(text, "fuzz", &nodes) {
        assert!(walks.iter().flatten().all(|&i| i < 4));
    }
});
