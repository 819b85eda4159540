//! `name<TAB>id` dictionaries.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = kgcache::data::parse_dictionary(text, "fuzz") {
        for i in 0..v.len() {
            assert_eq!(v.id(v.name(i)), Some(i));
        }
    }
});
