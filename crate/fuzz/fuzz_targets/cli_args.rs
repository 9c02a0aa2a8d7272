#![no_main]

use libfuzzer_sys::fuzz_target;

// NUL-separated argument vector; only parsed, never executed.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let args = std::iter::once("qspin").chain(text.split('\0'));
    if let Err(e) = qspin_cli::parse_args(args) {
        let _ = e.render().to_string();
    }
});
