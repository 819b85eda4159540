//! Checkpoint sidecar metadata.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(meta) = kgcache::scoring::CheckpointMeta::parse(text) {
        assert_eq!(
            kgcache::scoring::CheckpointMeta::parse(&meta.to_text()).unwrap(),
            meta
        );
    }
});
