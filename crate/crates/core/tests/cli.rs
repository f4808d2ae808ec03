mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures_dir;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_structsynth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn source(domain: &str, id: &str) -> String {
    fixtures_dir()
        .join("sources")
        .join(domain)
        .join(format!("{id}.html"))
        .display()
        .to_string()
}

fn run_fixture(domain: &str, out: &Path) -> Output {
    let stub = fixtures_dir().display().to_string();
    run(&[
        "run",
        "--domain",
        domain,
        "--stub",
        &stub,
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&[
            "validate",
            "--domain",
            "ui",
            "--viewport",
            "0x10",
            &source("ui", "ui-0000")
        ])),
        1
    );
    assert_eq!(
        code(&run(&["validate", "--domain", "ui", "/definitely/not/here.html"])),
        1
    );
}

#[test]
fn validate_exit_codes() {
    let ok = run(&[
        "validate",
        "--domain",
        "ui",
        &source("ui", "ui-0000"),
        &source("ui", "ui-0001"),
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    // Repairable layout defects are warnings.
    assert_eq!(code(&run(&["validate", "--domain", "ui", &source("ui", "ui-0003")])), 0);
    // Metadata leaked into CSS is an error even though it is repairable.
    assert_eq!(code(&run(&["validate", "--domain", "ui", &source("ui", "ui-0004")])), 3);
    assert_eq!(code(&run(&["validate", "--domain", "ui", &source("ui", "ui-0012")])), 3);
    assert_eq!(code(&run(&["validate", "--domain", "ui", &source("ui", "ui-0017")])), 3);
    assert_eq!(
        code(&run(&["validate", "--domain", "slide", &source("slide", "slide-0011")])),
        3
    );
}

#[test]
fn validate_json_diagnostics() {
    let out = run(&["validate", "--json", "--domain", "ui", &source("ui", "ui-0004")]);
    let lines: Vec<Value> = String::from_utf8_lossy(&out.stderr)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(
        lines.iter().any(|l| l.to_string().contains("H4-css-metadata")),
        "{lines:?}"
    );
}

#[test]
fn schema_describe_lists_both_domains() {
    let out = run(&["schema", "describe"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    for name in [
        "schematic diagram",
        "instructor",
        "upper taskbar",
        "popup window",
        "media player",
        "language learning",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn missing_stub_fixture_is_a_stage_failure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("stub.json"), "{}").unwrap();
    let out = run(&[
        "run",
        "--domain",
        "ui",
        "--stub",
        dir.path().to_str().unwrap(),
        "--count",
        "2",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fixture("ui", dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "descriptions.jsonl",
        "records.jsonl",
        "dropped.jsonl",
        "manifest.json",
        "stats.json",
        "coco.json",
        "captions.jsonl",
        "classification.jsonl",
        "markup/index.jsonl",
        "images/ui-0000.png",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["outputs"]["coco.json"].is_string());
    assert!(manifest["outputs"].get("manifest.json").is_none());
}

#[test]
fn staged_commands_match_run() {
    let stub = fixtures_dir().display().to_string();
    let whole = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_fixture("slide", whole.path())), 0);

    let staged = tempfile::tempdir().unwrap();
    let o = staged.path().to_str().unwrap();
    let common = ["--domain", "slide", "--stub", &stub, "--seed", "7", "--out", o];
    assert_eq!(code(&run(&[&["ideate"][..], &common].concat())), 0);
    let descs = staged.path().join("descriptions.jsonl");
    let d = descs.to_str().unwrap();
    assert_eq!(code(&run(&[&["synth", "--descriptions", d][..], &common].concat())), 0);
    let markup = staged.path().join("markup");
    let m = markup.to_str().unwrap();
    let out = run(&[&["produce", "--descriptions", d, "--markup", m][..], &common].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    for f in [
        "descriptions.jsonl",
        "records.jsonl",
        "dropped.jsonl",
        "images/slide-0004.png",
    ] {
        assert_eq!(
            std::fs::read(whole.path().join(f)).unwrap(),
            std::fs::read(staged.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn export_with_split_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_fixture("ui", &dir.path().join("run"))), 0);
    let records = dir.path().join("run/records.jsonl");
    let exp = dir.path().join("exp");
    let out = run(&[
        "export",
        "--records",
        records.to_str().unwrap(),
        "--split",
        "70,15,15",
        "--seed",
        "3",
        "--out",
        exp.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let split: Value = serde_json::from_str(&std::fs::read_to_string(exp.join("split.json")).unwrap()).unwrap();
    let sizes: Vec<usize> = ["train", "val", "test"]
        .iter()
        .map(|k| split[k].as_array().unwrap().len())
        .collect();
    // 17 records: val and test floor to 2 each.
    assert_eq!(sizes, [13, 2, 2]);
    for k in ["train", "val", "test"] {
        assert!(exp.join(format!("coco_{k}.json")).is_file());
    }
    assert_eq!(
        code(&run(&[
            "export",
            "--records",
            records.to_str().unwrap(),
            "--split",
            "50,50",
            "--out",
            exp.to_str().unwrap()
        ])),
        1
    );

    let reference = fixtures_dir().join("reference_ui.json");
    let out = run(&[
        "stats",
        "--records",
        records.to_str().unwrap(),
        "--manifest",
        dir.path().join("run/manifest.json").to_str().unwrap(),
        "--reference",
        reference.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("filtered out 1 of 18 (5.6%)"), "{text}");
    assert!(text.contains("(reference 9774"), "{text}");
}
