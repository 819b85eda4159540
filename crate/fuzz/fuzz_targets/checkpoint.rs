//! Binary checkpoint decoding; anything that decodes must re-encode and decode again.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(store) = kgcache::scoring::decode_checkpoint(data) {
        let again = kgcache::scoring::encode_checkpoint(&store);
        assert!(kgcache::scoring::decode_checkpoint(&again).is_ok());
    }
});
