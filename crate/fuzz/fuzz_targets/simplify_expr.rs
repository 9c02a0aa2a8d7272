#![no_main]

use libfuzzer_sys::fuzz_target;
use qspin_core::expr::{parse, simplify};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.len() > 512 {
        return;
    }
    if let Ok(e) = parse(text) {
        let once = simplify(&e);
        parse(&once.to_string()).expect("normal form reparses");
    }
});
