mod common;

use std::collections::BTreeMap;

use common::{fixture_run, fixtures_dir};
use serde_json::Value;
use structsynth::dataset::{coco_json, compute_stats, records_jsonl};
use structsynth::schema::{element_taxonomy, Domain};
use structsynth::synth::{description_id, stub_entries, GenerationConfig, STUB_FILE};

fn load_sources(domain: Domain) -> Vec<(String, String)> {
    let dir = fixtures_dir().join("sources").join(domain.as_str());
    let descs: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("descriptions.json")).unwrap()).unwrap();
    descs
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let markup = std::fs::read_to_string(dir.join(format!("{}.html", description_id(domain, i)))).unwrap();
            (d, markup)
        })
        .collect()
}

#[test]
fn stub_file_matches_sources() {
    let config = GenerationConfig::default();
    let mut want = BTreeMap::new();
    for domain in Domain::ALL {
        want.extend(stub_entries(domain, &load_sources(domain), &config).unwrap());
    }
    let got: BTreeMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(fixtures_dir().join(STUB_FILE)).unwrap()).unwrap();
    assert_eq!(got, want, "fixtures/stub.json is stale; rerun the build_stub example");
}

#[test]
fn fixture_corpus_outcomes() {
    let ui = fixture_run(Domain::Ui);
    let c = ui.manifest.counts;
    assert_eq!(
        (c.input, c.parse_failed, c.lint_rejected, c.scored, c.kept, c.dropped),
        (20, 1, 1, 18, 17, 1)
    );
    assert_eq!(ui.manifest.dropped, ["ui-0009"]);
    let rejected: Vec<&str> = ui.manifest.rejections.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(rejected, ["ui-0012", "ui-0017"]);

    let slide = fixture_run(Domain::Slide);
    let c = slide.manifest.counts;
    assert_eq!(
        (c.input, c.parse_failed, c.lint_rejected, c.scored, c.kept, c.dropped),
        (20, 0, 1, 19, 18, 1)
    );
    assert_eq!(slide.manifest.dropped, ["slide-0015"]);
}

#[test]
fn fixture_corpus_exercises_every_repair() {
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    for domain in Domain::ALL {
        for r in fixture_run(domain).produced.kept {
            for (rule, n) in r.repairs {
                *totals.entry(rule).or_default() += n;
            }
        }
    }
    for rule in ["H1-bgfill", "H2-imgdims", "H3-menu-open", "H4-css-metadata"] {
        assert!(
            totals.get(rule).copied().unwrap_or(0) > 0,
            "{rule} never applied: {totals:?}"
        );
    }
}

#[test]
fn in_process_runs_are_deterministic() {
    for domain in Domain::ALL {
        let a = fixture_run(domain);
        let b = fixture_run(domain);
        assert_eq!(a.manifest.to_json(), b.manifest.to_json());
        assert_eq!(records_jsonl(&a.produced.kept), records_jsonl(&b.produced.kept));
        for (x, y) in a.produced.kept.iter().zip(&b.produced.kept) {
            assert_eq!(x.png, y.png, "{}", x.id);
        }
    }
}

// Reads COCO through untyped JSON only, so the writer's own types play no part.
#[test]
fn coco_reads_back_independently() {
    for domain in Domain::ALL {
        let run = fixture_run(domain);
        let records = &run.produced.kept;
        let coco: Value = serde_json::from_str(&coco_json(records).unwrap()).unwrap();
        let cats: Vec<&str> = coco["categories"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["name"].as_str().unwrap())
            .collect();
        let want: Vec<&str> = element_taxonomy(domain).iter().map(|c| c.name).collect();
        assert_eq!(cats, want);

        let mut file_of = BTreeMap::new();
        for img in coco["images"].as_array().unwrap() {
            file_of.insert(
                img["id"].as_u64().unwrap(),
                img["file_name"].as_str().unwrap().to_string(),
            );
        }
        let mut by_file: BTreeMap<String, Vec<[u64; 5]>> = BTreeMap::new();
        for a in coco["annotations"].as_array().unwrap() {
            let b: Vec<u64> = a["bbox"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap())
                .collect();
            assert_eq!(a["area"].as_u64().unwrap(), b[2] * b[3]);
            let file = &file_of[&a["image_id"].as_u64().unwrap()];
            by_file
                .entry(file.clone())
                .or_default()
                .push([a["category_id"].as_u64().unwrap(), b[0], b[1], b[2], b[3]]);
        }
        for r in records {
            let got = by_file.remove(&format!("{}.png", r.id)).unwrap_or_default();
            let want: Vec<[u64; 5]> = r
                .boxes
                .iter()
                .map(|b| {
                    [
                        b.category_id as u64,
                        b.bbox.x as u64,
                        b.bbox.y as u64,
                        b.bbox.w as u64,
                        b.bbox.h as u64,
                    ]
                })
                .collect();
            assert_eq!(got, want, "{}", r.id);
            for b in &r.boxes {
                assert!(b.bbox.x + b.bbox.w <= r.width && b.bbox.y + b.bbox.h <= r.height);
            }
        }
        assert!(by_file.is_empty());
    }
}

#[test]
fn fixture_stats_cover_every_field() {
    let mut records = Vec::new();
    let mut descs = Vec::new();
    for domain in Domain::ALL {
        let run = fixture_run(domain);
        records.extend(run.produced.kept);
        descs.extend(run.descriptions);
    }
    let stats = compute_stats(&records, &descs);
    let total: usize = records.iter().map(|r| r.boxes.len()).sum();
    assert_eq!(stats.total_elements as usize, total);
    assert_eq!(stats.avg_elements, total as f64 / records.len() as f64);
    assert_eq!(stats.n_descriptions, 40);
    assert_eq!(stats.n_kept, 35);
    assert!(stats.n_charts > 0 && stats.n_diagrams > 0 && stats.n_images_and_icons > 0);
}
