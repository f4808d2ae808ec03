//! Dataset materialization (COCO detection, captions, screen classification)
//! and corpus statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::align::{format_percent, FilterStats};
use crate::assets::{AssetKind, AssetSource};
use crate::layout::LabeledBox;
use crate::schema::{self, Domain};
use crate::synth::DescriptionRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub scorer_id: String,
    /// Digest of the ideation prompt that produced the description.
    pub prompt_digest: String,
    /// Digest of the markup generation prompt.
    pub generation_digest: String,
    /// Digest of the repaired, canonically serialized markup.
    pub markup_digest: String,
    pub raster_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub domain: Domain,
    pub description: String,
    /// Relative to the output directory.
    pub raster_path: String,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<LabeledBox>,
    pub screen_class: Option<String>,
    pub score: f64,
    /// Repair rule id → applications.
    pub repairs: BTreeMap<String, usize>,
    /// Lint rule id → findings (warnings only on kept records).
    pub lint: BTreeMap<String, usize>,
    /// Resolved placeholders by kind.
    pub assets: BTreeMap<AssetKind, usize>,
    pub asset_sources: BTreeMap<AssetSource, usize>,
    pub provenance: Provenance,
    /// Encoded PNG; loaded from `raster_path` when records are read back.
    #[serde(skip)]
    pub png: Option<Arc<Vec<u8>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("no records to export")]
    EmptyCorpus,
    #[error("records span more than one domain")]
    MixedDomain,
    #[error("record {0} has no screen class")]
    MissingScreenClass(String),
    #[error("record {0} has no raster")]
    MissingRaster(String),
    #[error("split percentages must be three non-negative integers summing to 100, got {0}")]
    BadSplit(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn sorted(records: &[DatasetRecord]) -> Vec<&DatasetRecord> {
    let mut v: Vec<_> = records.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

/// Integer image ids: 1-based position in record-id order.
pub fn image_ids(records: &[DatasetRecord]) -> BTreeMap<String, u64> {
    sorted(records)
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.clone(), i as u64 + 1))
        .collect()
}

fn single_domain(records: &[DatasetRecord]) -> Result<Domain, DatasetError> {
    let first = records.first().ok_or(DatasetError::EmptyCorpus)?.domain;
    if records.iter().any(|r| r.domain != first) {
        return Err(DatasetError::MixedDomain);
    }
    Ok(first)
}

pub fn image_file_name(record: &DatasetRecord) -> String {
    format!("{}.png", record.id)
}

/// COCO document for `records`, with image ids taken from `ids`.
pub fn coco_value(records: &[DatasetRecord], ids: &BTreeMap<String, u64>) -> Result<Value, DatasetError> {
    let domain = single_domain(records)?;
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut ann_id = 1u64;
    for r in sorted(records) {
        let image_id = ids[&r.id];
        images.push(json!({
            "id": image_id,
            "file_name": image_file_name(r),
            "width": r.width,
            "height": r.height,
        }));
        for b in &r.boxes {
            annotations.push(json!({
                "id": ann_id,
                "image_id": image_id,
                "category_id": b.category_id,
                "bbox": [b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h],
                "area": b.bbox.area(),
                "iscrowd": 0,
            }));
            ann_id += 1;
        }
    }
    let categories: Vec<Value> = schema::element_taxonomy(domain)
        .into_iter()
        .map(|c| json!({"id": c.id, "name": c.name, "supercategory": domain.as_str()}))
        .collect();
    Ok(json!({"images": images, "annotations": annotations, "categories": categories}))
}

pub fn coco_json(records: &[DatasetRecord]) -> Result<String, DatasetError> {
    let value = coco_value(records, &image_ids(records))?;
    Ok(serde_json::to_string_pretty(&value).expect("COCO serializes") + "\n")
}

pub const COCO_FILE: &str = "coco.json";
pub const CAPTIONS_FILE: &str = "captions.jsonl";
pub const CLASSIFICATION_FILE: &str = "classification.jsonl";
pub const IMAGES_DIR: &str = "images";

/// Writes `coco.json` and `images/<id>.png`. Returns the written paths.
pub fn export_detection(records: &[DatasetRecord], out_dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let json = coco_json(records)?;
    let mut written = Vec::new();
    for r in sorted(records) {
        let png = r
            .png
            .as_ref()
            .ok_or_else(|| DatasetError::MissingRaster(r.id.clone()))?;
        let path = out_dir.join(IMAGES_DIR).join(image_file_name(r));
        write_file(&path, png)?;
        written.push(path);
    }
    let path = out_dir.join(COCO_FILE);
    write_file(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}

fn jsonl(lines: impl Iterator<Item = Value>) -> String {
    lines
        .map(|v| serde_json::to_string(&v).expect("line serializes") + "\n")
        .collect()
}

pub fn captions_jsonl(records: &[DatasetRecord]) -> Result<String, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let ids = image_ids(records);
    Ok(jsonl(
        sorted(records)
            .into_iter()
            .map(|r| json!({"image_id": ids[&r.id], "caption": r.description})),
    ))
}

pub fn classification_jsonl(records: &[DatasetRecord]) -> Result<String, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let ids = image_ids(records);
    let mut lines = Vec::new();
    for r in sorted(records) {
        let label = r
            .screen_class
            .as_ref()
            .ok_or_else(|| DatasetError::MissingScreenClass(r.id.clone()))?;
        lines.push(json!({"image_id": ids[&r.id], "label": label.to_lowercase()}));
    }
    Ok(jsonl(lines.into_iter()))
}

pub fn export_captions(records: &[DatasetRecord], out_path: &Path) -> Result<(), DatasetError> {
    write_file(out_path, captions_jsonl(records)?.as_bytes())
}

pub fn export_classification(records: &[DatasetRecord], out_path: &Path) -> Result<(), DatasetError> {
    write_file(out_path, classification_jsonl(records)?.as_bytes())
}

pub fn parse_split(raw: &str) -> Result<[u32; 3], DatasetError> {
    let bad = || DatasetError::BadSplit(raw.to_string());
    let parts: Vec<u32> = raw
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let parts: [u32; 3] = parts.try_into().map_err(|_| bad())?;
    if parts.iter().sum::<u32>() != 100 {
        return Err(bad());
    }
    Ok(parts)
}

/// Seeded shuffle into train/val/test. Validation and test sizes are floored;
/// train takes the remainder.
pub fn split_ids(ids: &[String], percents: [u32; 3], seed: u64) -> [Vec<String>; 3] {
    let mut shuffled: Vec<String> = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let n_val = n * percents[1] as usize / 100;
    let n_test = n * percents[2] as usize / 100;
    let n_train = n - n_val - n_test;
    let mut val = shuffled.split_off(n_train);
    let test = val.split_off(n_val);
    let mut train = shuffled;
    train.sort();
    val.sort();
    let mut test = test;
    test.sort();
    [train, val, test]
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Writes `split.json` and one COCO file per non-empty split, sharing image
/// ids with the full export.
pub fn export_splits(
    records: &[DatasetRecord],
    percents: [u32; 3],
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, DatasetError> {
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let parts = split_ids(&ids, percents, seed);
    let image_ids = image_ids(records);
    let mut written = Vec::new();
    let mut index = serde_json::Map::new();
    for (name, part) in SPLIT_NAMES.iter().zip(&parts) {
        index.insert(name.to_string(), json!(part));
        let subset: Vec<DatasetRecord> = records.iter().filter(|r| part.contains(&r.id)).cloned().collect();
        if subset.is_empty() {
            continue;
        }
        let value = coco_value(&subset, &image_ids)?;
        let path = out_dir.join(format!("coco_{name}.json"));
        write_file(
            &path,
            (serde_json::to_string_pretty(&value).expect("COCO serializes") + "\n").as_bytes(),
        )?;
        written.push(path);
    }
    let path = out_dir.join("split.json");
    write_file(
        &path,
        (serde_json::to_string_pretty(&Value::Object(index)).expect("split serializes") + "\n").as_bytes(),
    )?;
    written.push(path);
    Ok(written)
}

/// One record per line, sorted by id.
pub fn records_jsonl(records: &[DatasetRecord]) -> String {
    sorted(records)
        .into_iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

/// Reads a records file; rasters are loaded relative to its directory.
pub fn load_records(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut r: DatasetRecord = serde_json::from_str(line).map_err(|e| DatasetError::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?;
        let png_path = base.join(&r.raster_path);
        if png_path.exists() {
            r.png = Some(Arc::new(std::fs::read(&png_path).map_err(io_err(&png_path))?));
        }
        out.push(r);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_descriptions: u64,
    pub n_kept: u64,
    /// Resolved image, icon and background placeholders.
    pub n_images_and_icons: u64,
    pub n_charts: u64,
    pub n_diagrams: u64,
    pub total_elements: u64,
    pub avg_elements: f64,
    pub per_class_counts: BTreeMap<String, u64>,
    pub normalized_log_distribution: BTreeMap<String, f64>,
    pub total_words: u64,
    pub total_entities: u64,
    pub desc_avg_words: f64,
    pub desc_avg_entities: f64,
    pub images_per_sample: f64,
    pub charts_per_sample: f64,
    pub diagrams_per_sample: f64,
    pub elements_per_sample: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `log10(1 + n) / max log10(1 + n)`; all zero when every count is zero.
pub fn normalized_log_distribution(counts: &BTreeMap<String, u64>) -> BTreeMap<String, f64> {
    let logs: BTreeMap<&String, f64> = counts.iter().map(|(k, &n)| (k, (1.0 + n as f64).log10())).collect();
    let max = logs.values().copied().fold(0.0, f64::max);
    logs.into_iter()
        .map(|(k, l)| (k.clone(), if max > 0.0 { l / max } else { 0.0 }))
        .collect()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn ends_sentence(token: &str) -> bool {
    token.trim_end_matches(['"', '\'', ')', ']']).ends_with(['.', '!', '?'])
}

/// Maximal runs of capitalized tokens. A sentence-initial token never counts,
/// and punctuation at the end of a token closes its run.
pub fn entity_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_run = false;
    let mut sentence_start = true;
    for token in text.split_whitespace() {
        let word = token.trim_start_matches(|c: char| !c.is_alphanumeric());
        let capitalized = word.chars().next().is_some_and(char::is_uppercase);
        if capitalized && !sentence_start {
            if !in_run {
                count += 1;
            }
            in_run = true;
        } else {
            in_run = false;
        }
        let closes = token.ends_with(|c: char| !c.is_alphanumeric());
        if closes {
            in_run = false;
        }
        sentence_start = ends_sentence(token);
    }
    count
}

impl CorpusStats {
    fn finish(mut self) -> CorpusStats {
        self.avg_elements = ratio(self.total_elements, self.n_kept);
        self.elements_per_sample = self.avg_elements;
        self.desc_avg_words = ratio(self.total_words, self.n_descriptions);
        self.desc_avg_entities = ratio(self.total_entities, self.n_descriptions);
        let count = |classes: &[&str]| {
            classes
                .iter()
                .map(|c| self.per_class_counts.get(*c).copied().unwrap_or(0))
                .sum()
        };
        self.images_per_sample = ratio(count(&["image"]), self.n_kept);
        self.charts_per_sample = ratio(count(&["chart"]), self.n_kept);
        self.diagrams_per_sample = ratio(count(&["diagram", "schematic diagram"]), self.n_kept);
        self.normalized_log_distribution = normalized_log_distribution(&self.per_class_counts);
        self
    }

    /// Statistics of the concatenated corpora.
    pub fn merge(&self, other: &CorpusStats) -> CorpusStats {
        let mut classes = self.per_class_counts.clone();
        for (k, v) in &other.per_class_counts {
            *classes.entry(k.clone()).or_insert(0) += v;
        }
        CorpusStats {
            n_descriptions: self.n_descriptions + other.n_descriptions,
            n_kept: self.n_kept + other.n_kept,
            n_images_and_icons: self.n_images_and_icons + other.n_images_and_icons,
            n_charts: self.n_charts + other.n_charts,
            n_diagrams: self.n_diagrams + other.n_diagrams,
            total_elements: self.total_elements + other.total_elements,
            per_class_counts: classes,
            total_words: self.total_words + other.total_words,
            total_entities: self.total_entities + other.total_entities,
            ..CorpusStats::default()
        }
        .finish()
    }
}

pub fn compute_stats(records: &[DatasetRecord], descriptions: &[DescriptionRecord]) -> CorpusStats {
    let mut s = CorpusStats {
        n_descriptions: descriptions.len() as u64,
        n_kept: records.len() as u64,
        ..CorpusStats::default()
    };
    for r in records {
        for (kind, n) in &r.assets {
            let n = *n as u64;
            match kind {
                AssetKind::Image | AssetKind::Icon | AssetKind::Background => s.n_images_and_icons += n,
                AssetKind::Chart => s.n_charts += n,
                AssetKind::Diagram => s.n_diagrams += n,
            }
        }
        s.total_elements += r.boxes.len() as u64;
        for b in &r.boxes {
            *s.per_class_counts.entry(b.class.clone()).or_insert(0) += 1;
        }
    }
    for d in descriptions {
        s.total_words += word_count(&d.text) as u64;
        s.total_entities += entity_count(&d.text) as u64;
    }
    s.finish()
}

/// Reference figures to compare against, keyed by stats field name
/// (plus `filtered_percent`).
pub type ReferenceValues = BTreeMap<String, f64>;

fn stat_fields(stats: &CorpusStats) -> Vec<(&'static str, f64, bool)> {
    vec![
        ("n_descriptions", stats.n_descriptions as f64, true),
        ("n_kept", stats.n_kept as f64, true),
        ("n_images_and_icons", stats.n_images_and_icons as f64, true),
        ("n_charts", stats.n_charts as f64, true),
        ("n_diagrams", stats.n_diagrams as f64, true),
        ("avg_elements", stats.avg_elements, false),
        ("desc_avg_words", stats.desc_avg_words, false),
        ("desc_avg_entities", stats.desc_avg_entities, false),
        ("images_per_sample", stats.images_per_sample, false),
        ("charts_per_sample", stats.charts_per_sample, false),
        ("diagrams_per_sample", stats.diagrams_per_sample, false),
        ("elements_per_sample", stats.elements_per_sample, false),
    ]
}

fn fmt_stat(v: f64, integral: bool) -> String {
    if integral {
        format!("{}", v as u64)
    } else {
        format!("{v:.2}")
    }
}

pub fn filter_line(filter: &FilterStats) -> String {
    format!(
        "filtered out {} of {} ({}) below score {}",
        filter.dropped_count,
        filter.input_count,
        filter.drop_percent(),
        filter.threshold
    )
}

/// Plain-text report; with reference values each line also shows the
/// reference and the difference.
pub fn stats_report(stats: &CorpusStats, filter: Option<&FilterStats>, reference: Option<&ReferenceValues>) -> String {
    let mut out = String::new();
    for (name, value, integral) in stat_fields(stats) {
        let _ = write!(out, "{name:<22} {}", fmt_stat(value, integral));
        if let Some(r) = reference.and_then(|r| r.get(name)) {
            let _ = write!(out, "  (reference {}, delta {:+.2})", fmt_stat(*r, integral), value - r);
        }
        out.push('\n');
    }
    if let Some(f) = filter {
        let _ = writeln!(out, "{}", filter_line(f));
        if let Some(r) = reference.and_then(|r| r.get("filtered_percent")) {
            let _ = writeln!(out, "  reference filtered {r}%");
        }
    }
    if !stats.per_class_counts.is_empty() {
        out.push_str("class distribution (count, normalized log):\n");
        for (class, n) in &stats.per_class_counts {
            let _ = writeln!(
                out,
                "  {class:<20} {n:>6}  {:.3}",
                stats.normalized_log_distribution[class]
            );
        }
    }
    out
}

pub fn stats_json(stats: &CorpusStats, filter: Option<&FilterStats>) -> Value {
    let mut v = serde_json::to_value(stats).expect("stats serialize");
    if let Some(f) = filter {
        v["filter"] = serde_json::to_value(f).expect("filter stats serialize");
        v["filter"]["drop_percent"] = json!(f.drop_percent());
    }
    v
}

/// Formats `dropped / input` the way the report does.
pub fn drop_percent(dropped: u64, input: u64) -> String {
    format_percent(dropped, input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::PixelBox;
    use crate::markup::NodePath;

    pub(crate) fn record(id: &str, domain: Domain, boxes: &[(u32, [u32; 4])]) -> DatasetRecord {
        DatasetRecord {
            id: id.into(),
            domain,
            description: format!("description of {id}"),
            raster_path: format!("images/{id}.png"),
            width: 628,
            height: 1118,
            boxes: boxes
                .iter()
                .enumerate()
                .map(|(i, (cat, b))| LabeledBox {
                    class: schema::ElementClass::by_id(domain, *cat).unwrap().name.to_string(),
                    category_id: *cat,
                    bbox: PixelBox {
                        x: b[0],
                        y: b[1],
                        w: b[2],
                        h: b[3],
                    },
                    path: NodePath(vec![1, i]),
                })
                .collect(),
            screen_class: Some("login".into()),
            score: 0.5,
            repairs: BTreeMap::new(),
            lint: BTreeMap::new(),
            assets: BTreeMap::new(),
            asset_sources: BTreeMap::new(),
            provenance: Provenance {
                seed: 0,
                scorer_id: "lexical-v1".into(),
                prompt_digest: String::new(),
                generation_digest: String::new(),
                markup_digest: String::new(),
                raster_digest: String::new(),
            },
            png: None,
        }
    }

    #[test]
    fn scores_survive_jsonl() {
        let mut r = record("a", Domain::Ui, &[]);
        r.score = 6.0 / 13.0;
        let back: DatasetRecord = serde_json::from_str(records_jsonl(&[r.clone()]).trim()).unwrap();
        assert_eq!(back.score.to_bits(), r.score.to_bits());
    }

    #[test]
    fn coco_area_example() {
        let r = record("a", Domain::Slide, &[(1, [0, 0, 628, 38])]);
        let v: Value = serde_json::from_str(&coco_json(&[r]).unwrap()).unwrap();
        assert_eq!(v["annotations"][0]["area"], 23864);
        assert_eq!(v["annotations"][0]["bbox"], json!([0, 0, 628, 38]));
        assert_eq!(v["categories"].as_array().unwrap().len(), 10);
        assert_eq!(v["categories"][0]["name"], "title");
    }

    #[test]
    fn coco_ids_follow_record_order() {
        let a = record("b", Domain::Ui, &[(3, [0, 0, 10, 10])]);
        let b = record("a", Domain::Ui, &[(1, [0, 0, 5, 5]), (2, [5, 5, 5, 5])]);
        let text = coco_json(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(text, coco_json(&[b, a]).unwrap());
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["images"][0]["file_name"], "a.png");
        assert_eq!(v["annotations"][2]["image_id"], 2);
        assert_eq!(v["categories"].as_array().unwrap().len(), 12);
    }

    #[test]
    fn export_errors() {
        assert!(matches!(coco_json(&[]), Err(DatasetError::EmptyCorpus)));
        let mixed = [record("a", Domain::Ui, &[]), record("b", Domain::Slide, &[])];
        assert!(matches!(coco_json(&mixed), Err(DatasetError::MixedDomain)));
        let mut r = record("x", Domain::Ui, &[]);
        r.screen_class = None;
        assert!(matches!(classification_jsonl(&[r]), Err(DatasetError::MissingScreenClass(id)) if id == "x"));
    }

    #[test]
    fn jsonl_exports() {
        let recs = [record("b", Domain::Ui, &[]), record("a", Domain::Ui, &[])];
        let captions = captions_jsonl(&recs).unwrap();
        assert_eq!(captions.lines().count(), 2);
        assert!(captions.ends_with('\n'));
        assert_eq!(
            captions.lines().next().unwrap(),
            r#"{"caption":"description of a","image_id":1}"#
        );
        assert_eq!(
            classification_jsonl(&recs).unwrap().lines().next().unwrap(),
            r#"{"image_id":1,"label":"login"}"#
        );
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        let ids: Vec<String> = (0..40).map(|i| format!("r{i:02}")).collect();
        let [train, val, test] = split_ids(&ids, [70, 15, 15], 1);
        assert_eq!((train.len(), val.len(), test.len()), (28, 6, 6));
        let mut all: Vec<_> = train.iter().chain(&val).chain(&test).cloned().collect();
        all.sort();
        assert_eq!(all, ids);
        assert_eq!(split_ids(&ids, [70, 15, 15], 1), [train, val, test]);
        assert!(parse_split("70,15,15").is_ok());
        assert!(parse_split("70,20,15").is_err());
        assert!(parse_split("70,30").is_err());
    }

    #[test]
    fn distribution_example() {
        let counts: BTreeMap<String, u64> = [("a".into(), 9), ("b".into(), 99)].into();
        let d = normalized_log_distribution(&counts);
        assert_eq!(d["a"], 0.5);
        assert_eq!(d["b"], 1.0);
    }

    #[test]
    fn words_and_entities() {
        let s = "Bob teaches Public Health at Night.";
        assert_eq!(word_count(s), 6);
        assert_eq!(entity_count(s), 2);
        assert_eq!(entity_count("The talk. Then Ada Lovelace spoke"), 1);
        assert_eq!(entity_count(""), 0);
    }

    #[test]
    fn avg_elements_and_merge() {
        let six = record("a", Domain::Ui, &[(1, [0, 0, 1, 1]); 6]);
        let eight = record("b", Domain::Ui, &[(2, [0, 0, 1, 1]); 8]);
        let s = compute_stats(&[six.clone(), eight.clone()], &[]);
        assert_eq!(s.avg_elements, 7.0);
        let merged = compute_stats(std::slice::from_ref(&six), &[]).merge(&compute_stats(&[eight], &[]));
        assert_eq!(merged, s);
        assert_eq!(compute_stats(&[], &[]), CorpusStats::default());
    }

    #[test]
    fn report_formats_percentages() {
        let f = FilterStats::new(10268, 215, 0.3);
        assert!(stats_report(&CorpusStats::default(), Some(&f), None).contains("(2.1%)"));
        let f = FilterStats::new(10000, 336, 0.3);
        assert!(stats_report(&CorpusStats::default(), Some(&f), None).contains("(3.36%)"));
        let f = FilterStats::new(0, 0, 0.3);
        assert!(stats_report(&CorpusStats::default(), Some(&f), None).contains("(0.0%)"));
        let reference: ReferenceValues = [("n_kept".to_string(), 10.0)].into();
        assert!(stats_report(&CorpusStats::default(), None, Some(&reference)).contains("(reference 10, delta -10.00)"));
    }
}
