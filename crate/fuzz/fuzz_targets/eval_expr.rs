#![no_main]

use libfuzzer_sys::fuzz_target;
use qspin_core::expr::{eval, parse, Binding};
use qspin_core::GammaSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(e) = parse(text) else {
        return;
    };
    let b = Binding::new()
        .with_gamma(GammaSet::dirac())
        .with("q", 0.5)
        .with("x", 1.25)
        .with("y", -0.75)
        .with("u", 0.5);
    // errors are fine; panics are not
    let _ = eval(&e, &b);
});
