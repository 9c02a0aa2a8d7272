#![no_main]

use libfuzzer_sys::fuzz_target;
use qspin_core::expr::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = parse(text) {
        let printed = e.to_string();
        let again = parse(&printed).expect("printed form reparses");
        assert_eq!(again, e, "round trip changed {text:?}");
    }
});
