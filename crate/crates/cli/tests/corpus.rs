use std::path::PathBuf;

use qspin_cli::config::{parse_config, RunConfig};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    assert!(!paths.is_empty());
    paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for data in seeds("config_parse") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(layer) = parse_config(text) {
            let _ = RunConfig::default().overlay(&layer).validate();
            accepted += 1;
        }
    }
    assert!(accepted > 0);
}

#[test]
fn cli_arg_seeds() {
    for data in seeds("cli_args") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        let args = std::iter::once("qspin").chain(text.split('\0'));
        if let Err(e) = qspin_cli::parse_args(args) {
            let _ = e.render().to_string();
        }
    }
}
