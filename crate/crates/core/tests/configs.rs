use std::path::Path;

use gpwb::experiments::ExperimentConfig;
use gpwb::format::{load, read_fixture};

#[test]
fn shipped_configs_and_fixtures_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => {
                ExperimentConfig::load(&path).unwrap();
            }
            Some("fix") => {
                read_fixture(&load(&path).unwrap()).unwrap();
            }
            _ => continue,
        }
        seen += 1;
    }
    assert!(seen >= 5);
}
