//! Rebuilds `fixtures/stub.json` from `fixtures/sources/<domain>/`.
//!
//! Usage: `cargo run -p structsynth --example build_stub [fixtures-dir]`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use structsynth::schema::Domain;
use structsynth::synth::{description_id, stub_entries, GenerationConfig, STUB_FILE};

fn load_pairs(dir: &Path, domain: Domain) -> Vec<(String, String)> {
    let src = dir.join("sources").join(domain.as_str());
    let descs: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(src.join("descriptions.json")).expect("descriptions.json"))
            .expect("descriptions.json is a list of strings");
    descs
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let path = src.join(format!("{}.html", description_id(domain, i)));
            let markup = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            (d, markup)
        })
        .collect()
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    let config = GenerationConfig::default();
    let mut all = BTreeMap::new();
    for domain in [Domain::Slide, Domain::Ui] {
        let pairs = load_pairs(&dir, domain);
        all.extend(stub_entries(domain, &pairs, &config).expect("default config is valid"));
    }
    let out = dir.join(STUB_FILE);
    let mut text = serde_json::to_string_pretty(&all).expect("string map serializes");
    text.push('\n');
    std::fs::write(&out, text).expect("write stub.json");
    println!("{} entries -> {}", all.len(), out.display());
}
