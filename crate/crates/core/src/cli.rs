//! Command-line front end: flag and config-file handling, the subcommands,
//! and the run manifest.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::align::{FilterStats, LexicalScorer, RemoteScorer, Scorer, DEFAULT_THRESHOLD};
use crate::assets::{AssetResolver, HttpSearchProvider, HttpTextToImageProvider, ProviderSet, DEFAULT_MAX_IN_FLIGHT};
use crate::dataset::{self, DatasetRecord};
use crate::layout::Viewport;
use crate::markup::{digest_hex, parse_bytes, Severity};
use crate::quality::{self, RepairRule};
use crate::schema::{self, Domain};
use crate::synth::{
    self, Candidate, DescriptionRecord, GenerationConfig, HttpClient, PipelineConfig, ProduceContext, RunManifest,
    StubClient, TextGenClient,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_STAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

pub const DESCRIPTIONS_FILE: &str = "descriptions.jsonl";
pub const MARKUP_DIR: &str = "markup";
pub const GENERATION_INDEX: &str = "index.jsonl";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const DROPPED_FILE: &str = "dropped.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Parser)]
#[command(
    name = "structsynth",
    version,
    about = "Synthesize labeled slide and mobile-UI datasets"
)]
pub struct Cli {
    /// Emit diagnostics on stderr as JSON lines.
    #[arg(long, global = true)]
    pub json: bool,
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More logging (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(flatten)]
    pub settings: ConfigFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect the label taxonomies.
    Schema {
        #[command(subcommand)]
        action: SchemaAction,
    },
    /// Generate design-concept descriptions into OUT/descriptions.jsonl.
    Ideate,
    /// Generate raw markup for each description into OUT/markup/.
    Synth {
        /// Descriptions JSONL from `ideate`.
        #[arg(long, value_name = "FILE")]
        descriptions: PathBuf,
    },
    /// Repair, render, score and filter generated markup.
    Produce {
        /// Descriptions JSONL from `ideate`.
        #[arg(long, value_name = "FILE")]
        descriptions: PathBuf,
        /// Directory holding `<id>.html` files from `synth`.
        #[arg(long, value_name = "DIR")]
        markup: PathBuf,
    },
    /// Parse, repair and lint markup files and print the findings.
    Validate {
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
    },
    /// Write COCO, caption and classification datasets from produced records.
    Export {
        /// records.jsonl from `produce` or `run`.
        #[arg(long, value_name = "FILE")]
        records: PathBuf,
    },
    /// Print corpus statistics.
    /// Repeat --records, --descriptions and --manifest to pool several runs.
    Stats {
        #[arg(long, value_name = "FILE", required = true)]
        records: Vec<PathBuf>,
        #[arg(long, value_name = "FILE")]
        descriptions: Vec<PathBuf>,
        /// Manifest whose filter counts are reported; several are summed.
        #[arg(long, value_name = "FILE")]
        manifest: Vec<PathBuf>,
        /// JSON object of reference values to compare against.
        #[arg(long, value_name = "FILE")]
        reference: Option<PathBuf>,
    },
    /// Ideate, generate, produce and export in one go.
    Run,
}

#[derive(Debug, Subcommand)]
pub enum SchemaAction {
    /// Print both taxonomies as JSON.
    Describe,
}

/// Settings shared by the file and the flags. Every field is optional so the
/// two layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFlags {
    /// slide or ui.
    #[arg(long, global = true)]
    pub domain: Option<Domain>,
    /// Number of descriptions to ideate.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Viewport override, WIDTHxHEIGHT.
    #[arg(long, global = true, value_name = "WxH")]
    pub viewport: Option<String>,
    /// Markup generation temperature.
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Description ideation temperature
    #[arg(long, global = true)]
    pub ideation_temperature: Option<f64>,
    /// Descriptions generated concurrently.
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Minimum alignment score kept.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// lexical or remote:URL.
    #[arg(long, global = true)]
    pub scorer: Option<String>,
    /// Text generation endpoint.
    #[arg(long, global = true, value_name = "URL")]
    pub llm_endpoint: Option<String>,
    /// Image search endpoint.
    #[arg(long, global = true, value_name = "URL")]
    pub search_endpoint: Option<String>,
    /// Text-to-image endpoint.
    #[arg(long, global = true, value_name = "URL")]
    pub t2i_endpoint: Option<String>,
    /// Replay text generation from DIR/stub.json.
    #[arg(long, global = true, value_name = "DIR")]
    pub stub: Option<PathBuf>,
    /// Seed for generation, asset fallbacks and splits
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// On-disk asset cache.
    #[arg(long, global = true, value_name = "DIR")]
    pub asset_cache: Option<PathBuf>,
    /// Concurrent provider requests.
    #[arg(long, global = true)]
    pub max_in_flight: Option<usize>,
    /// Network timeout per request, in seconds.
    #[arg(long, global = true)]
    pub timeout_secs: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Train/val/test percentages, e.g. 70,15,15.
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// File with replacement principles text for prompts.
    #[arg(long, global = true, value_name = "FILE")]
    pub principles: Option<PathBuf>,
    /// Screen class weights (config file only).
    #[arg(skip)]
    pub target_weights: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerChoice {
    Lexical,
    Remote(String),
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Option<Domain>,
    pub count: usize,
    pub viewport: Option<Viewport>,
    pub generation: GenerationConfig,
    pub threshold: f64,
    pub scorer: ScorerChoice,
    pub llm_endpoint: Option<String>,
    pub search_endpoint: Option<String>,
    pub t2i_endpoint: Option<String>,
    pub stub: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub asset_cache: Option<PathBuf>,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub jobs: Option<usize>,
    pub split: Option<[u32; 3]>,
}

pub const DEFAULT_COUNT: usize = 20;
pub const DEFAULT_TIMEOUT_SECS: u64 = 30;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stage(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Stage(_) => EXIT_STAGE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Stage(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn stage(msg: impl ToString) -> CliError {
    CliError::Stage(msg.to_string())
}

fn parse_viewport(raw: &str) -> Result<Viewport, CliError> {
    let (w, h) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("viewport {raw:?} is not WIDTHxHEIGHT")))?;
    let dim = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| usage(format!("bad viewport {raw:?}")))
    };
    Viewport::new(dim(w)?, dim(h)?).map_err(|e| usage(e.to_string()))
}

fn parse_scorer(raw: &str) -> Result<ScorerChoice, CliError> {
    match raw.trim() {
        "lexical" => Ok(ScorerChoice::Lexical),
        other => match other.strip_prefix("remote:") {
            Some(url) if !url.is_empty() => Ok(ScorerChoice::Remote(url.to_string())),
            _ => Err(usage(format!("scorer must be `lexical` or `remote:URL`, got {raw:?}"))),
        },
    }
}

pub fn load_config_file(path: &Path) -> Result<ConfigFlags, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

macro_rules! layer {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        ConfigFlags { $($field: $flags.$field.clone().or_else(|| $file.$field.clone()),)* }
    };
}

impl RunConfig {
    /// Flags win over the file, the file over built-in defaults.
    pub fn resolve(flags: &ConfigFlags, file: &ConfigFlags) -> Result<RunConfig, CliError> {
        let m = layer!(
            flags,
            file,
            domain,
            count,
            viewport,
            temperature,
            ideation_temperature,
            batch_size,
            threshold,
            scorer,
            llm_endpoint,
            search_endpoint,
            t2i_endpoint,
            stub,
            seed,
            out,
            asset_cache,
            max_in_flight,
            timeout_secs,
            jobs,
            split,
            principles,
            target_weights
        );
        let defaults = GenerationConfig::default();
        let principles_text = match &m.principles {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?),
            None => None,
        };
        let generation = GenerationConfig {
            temperature: m.temperature.unwrap_or(defaults.temperature),
            ideation_temperature: m.ideation_temperature.unwrap_or(defaults.ideation_temperature),
            batch_size: m.batch_size.unwrap_or(defaults.batch_size),
            seed: m.seed.unwrap_or(defaults.seed),
            principles_text,
            target_weights: m.target_weights.clone(),
        };
        let config = RunConfig {
            domain: m.domain,
            count: m.count.unwrap_or(DEFAULT_COUNT),
            viewport: m.viewport.as_deref().map(parse_viewport).transpose()?,
            generation,
            threshold: m.threshold.unwrap_or(DEFAULT_THRESHOLD),
            scorer: m
                .scorer
                .as_deref()
                .map(parse_scorer)
                .transpose()?
                .unwrap_or(ScorerChoice::Lexical),
            llm_endpoint: m.llm_endpoint,
            search_endpoint: m.search_endpoint,
            t2i_endpoint: m.t2i_endpoint,
            stub: m.stub,
            out: m.out,
            asset_cache: m.asset_cache,
            max_in_flight: m.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT),
            timeout: Duration::from_secs(m.timeout_secs.unwrap_or(DEFAULT_TIMEOUT_SECS)),
            jobs: m.jobs,
            split: m
                .split
                .as_deref()
                .map(dataset::parse_split)
                .transpose()
                .map_err(|e| usage(e.to_string()))?,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.count == 0 {
            return Err(usage("count must be positive"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(usage(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.max_in_flight == 0 {
            return Err(usage("max-in-flight must be positive"));
        }
        if let Some(domain) = self.domain {
            self.generation.validate(domain).map_err(|e| usage(e.to_string()))?;
        }
        Ok(())
    }

    fn domain(&self) -> Result<Domain, CliError> {
        self.domain.ok_or_else(|| usage("--domain is required (slide or ui)"))
    }

    fn out(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| usage("--out is required"))
    }

    fn viewport_for(&self, domain: Domain) -> Viewport {
        self.viewport.unwrap_or_else(|| Viewport::for_domain(domain))
    }

    fn client(&self) -> Result<Box<dyn TextGenClient>, CliError> {
        match (&self.stub, &self.llm_endpoint) {
            (Some(dir), _) => Ok(Box::new(StubClient::load(dir).map_err(|e| usage(e.to_string()))?)),
            (None, Some(url)) => Ok(Box::new(HttpClient::from_env(url.clone(), self.timeout))),
            (None, None) => Err(usage(
                "a text generation client is required: --stub DIR or --llm-endpoint URL",
            )),
        }
    }

    fn resolver(&self) -> AssetResolver {
        let providers = ProviderSet {
            search: self
                .search_endpoint
                .as_ref()
                .map(|u| Box::new(HttpSearchProvider::from_env(u.clone(), self.timeout)) as _),
            generative: self
                .t2i_endpoint
                .as_ref()
                .map(|u| Box::new(HttpTextToImageProvider::from_env(u.clone(), self.timeout)) as _),
        };
        let mut r = AssetResolver::new(providers).with_max_in_flight(self.max_in_flight);
        if let Some(dir) = &self.asset_cache {
            r = r.with_disk_cache(dir.clone());
        }
        r
    }

    fn scorer(&self) -> Box<dyn Scorer> {
        match &self.scorer {
            ScorerChoice::Lexical => Box::new(LexicalScorer),
            ScorerChoice::Remote(url) => Box::new(RemoteScorer::new(url.clone(), self.timeout)),
        }
    }

    fn pipeline(&self, domain: Domain) -> PipelineConfig {
        PipelineConfig {
            domain,
            count: self.count,
            viewport: self.viewport_for(domain),
            threshold: self.threshold,
            generation: self.generation.clone(),
        }
    }
}

struct Reporter {
    json: bool,
}

impl Reporter {
    fn emit(&self, severity: Severity, code: &str, message: &str, extra: serde_json::Value) {
        if self.json {
            let mut v = json!({"severity": severity, "code": code, "message": message});
            if let (Some(obj), serde_json::Value::Object(extra)) = (v.as_object_mut(), extra) {
                obj.extend(extra);
            }
            eprintln!("{v}");
        } else {
            let level = match severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            eprintln!("{level}[{code}]: {message}");
        }
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("item serializes") + "\n")
        .collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    dataset::write_file(path, bytes).map_err(stage)
}

/// Writes kept records (and their rasters) plus the dropped list.
fn write_production(out: &Path, produced: &synth::ProduceOutput) -> Result<(), CliError> {
    for r in &produced.kept {
        let png = r.png.as_ref().expect("produced records carry rasters");
        write(&out.join(&r.raster_path), png)?;
    }
    write(
        &out.join(RECORDS_FILE),
        dataset::records_jsonl(&produced.kept).as_bytes(),
    )?;
    write(
        &out.join(DROPPED_FILE),
        dataset::records_jsonl(&produced.dropped).as_bytes(),
    )
}

fn export_all(records: &[DatasetRecord], out: &Path, split: Option<[u32; 3]>, seed: u64) -> Result<(), CliError> {
    dataset::export_detection(records, out).map_err(stage)?;
    dataset::export_captions(records, &out.join(dataset::CAPTIONS_FILE)).map_err(stage)?;
    dataset::export_classification(records, &out.join(dataset::CLASSIFICATION_FILE)).map_err(stage)?;
    if let Some(percents) = split {
        dataset::export_splits(records, percents, seed, out).map_err(stage)?;
    }
    Ok(())
}

/// SHA-256 of every file under `dir` except the manifest, by relative path.
fn output_digests(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(base, &path, out)?;
            } else {
                let rel = path
                    .strip_prefix(base)
                    .expect("under base")
                    .to_string_lossy()
                    .replace('\\', "/");
                if rel != MANIFEST_FILE {
                    out.insert(rel, digest_hex(&std::fs::read(&path)?));
                }
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out).map_err(stage)?;
    Ok(out)
}

fn write_manifest(out: &Path, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
    manifest.outputs = output_digests(out)?;
    write(&out.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

fn cmd_ideate(cfg: &RunConfig, rep: &Reporter) -> Result<i32, CliError> {
    let domain = cfg.domain()?;
    let out = cfg.out()?;
    let client = cfg.client()?;
    let ideas = synth::ideate(domain, cfg.count, &cfg.generation, client.as_ref()).map_err(|e| usage(e.to_string()))?;
    write(&out.join(DESCRIPTIONS_FILE), to_jsonl(&ideas.records).as_bytes())?;
    for w in &ideas.warnings {
        rep.emit(Severity::Warning, "ideate-duplicate", w, json!({}));
    }
    for (i, e) in &ideas.failures {
        rep.emit(
            Severity::Error,
            "client-failure",
            &format!("description {i}: {e}"),
            json!({}),
        );
    }
    Ok(if ideas.failures.is_empty() { EXIT_OK } else { EXIT_STAGE })
}

#[derive(Serialize, Deserialize)]
struct GenerationEntry {
    id: String,
    generation_digest: String,
}

fn cmd_synth(cfg: &RunConfig, descriptions: &Path, pool: &rayon::ThreadPool) -> Result<i32, CliError> {
    let out = cfg.out()?;
    let client = cfg.client()?;
    let descs: Vec<DescriptionRecord> = read_jsonl(descriptions)?;
    let candidates = synth::synthesize(&descs, &cfg.generation, client.as_ref(), pool).map_err(stage)?;
    write_candidates(out, &candidates)?;
    Ok(EXIT_OK)
}

fn write_candidates(out: &Path, candidates: &[Candidate]) -> Result<(), CliError> {
    let dir = out.join(MARKUP_DIR);
    let mut index = Vec::new();
    for c in candidates {
        write(&dir.join(format!("{}.html", c.description.id)), c.markup.as_bytes())?;
        index.push(GenerationEntry {
            id: c.description.id.clone(),
            generation_digest: c.generation_digest.clone(),
        });
    }
    write(&dir.join(GENERATION_INDEX), to_jsonl(&index).as_bytes())
}

fn cmd_produce(cfg: &RunConfig, descriptions: &Path, markup: &Path, pool: &rayon::ThreadPool) -> Result<i32, CliError> {
    let out = cfg.out()?;
    let descs: Vec<DescriptionRecord> = read_jsonl(descriptions)?;
    let domain = match cfg.domain {
        Some(d) => d,
        None => descs
            .first()
            .map(|d| d.domain)
            .ok_or_else(|| usage("no descriptions"))?,
    };
    if descs.iter().any(|d| d.domain != domain) {
        return Err(usage("descriptions span more than one domain"));
    }
    let index_path = markup.join(GENERATION_INDEX);
    let digests: BTreeMap<String, String> = if index_path.exists() {
        read_jsonl::<GenerationEntry>(&index_path)?
            .into_iter()
            .map(|e| (e.id, e.generation_digest))
            .collect()
    } else {
        BTreeMap::new()
    };
    let mut candidates = Vec::new();
    for d in descs {
        let path = markup.join(format!("{}.html", d.id));
        let bytes = std::fs::read(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        candidates.push(Candidate {
            generation_digest: digests.get(&d.id).cloned().unwrap_or_default(),
            markup: String::from_utf8_lossy(&bytes).into_owned(),
            description: d,
        });
    }
    let pipeline = cfg.pipeline(domain);
    let resolver = cfg.resolver();
    let scorer = cfg.scorer();
    let ctx = ProduceContext {
        domain,
        viewport: pipeline.viewport,
        seed: cfg.generation.seed,
        threshold: cfg.threshold,
        resolver: &resolver,
        scorer: scorer.as_ref(),
    };
    let produced = synth::produce(&candidates, &ctx, pool).map_err(stage)?;
    write_production(out, &produced)?;
    let manifest = synth::manifest_for(&pipeline, "none", &scorer.id(), &produced, Vec::new());
    write_manifest(out, manifest)?;
    Ok(EXIT_OK)
}

fn cmd_validate(cfg: &RunConfig, files: &[PathBuf], rep: &Reporter) -> Result<i32, CliError> {
    let domain = cfg.domain()?;
    let viewport = cfg.viewport_for(domain);
    let mut invalid = false;
    for file in files {
        let name = file.display().to_string();
        let bytes = std::fs::read(file).map_err(|e| usage(format!("{name}: {e}")))?;
        let (doc, diags) = match parse_bytes(&bytes, domain) {
            Ok(v) => v,
            Err(e) => {
                rep.emit(Severity::Error, "parse", &e.to_string(), json!({"file": name}));
                invalid = true;
                continue;
            }
        };
        for d in &diags {
            rep.emit(
                d.severity,
                &d.code,
                &d.message,
                json!({"file": name, "line": d.line, "col": d.col}),
            );
        }
        let (fixed, report) = quality::repair(&doc);
        for a in &report.applied {
            let severity = if a.rule == RepairRule::CssMetadata {
                Severity::Error
            } else {
                Severity::Warning
            };
            invalid |= severity == Severity::Error;
            rep.emit(
                severity,
                a.rule.id(),
                &format!("repaired at {}: {:?} -> {:?}", a.path, a.before, a.after),
                json!({"file": name, "path": a.path}),
            );
        }
        let layout = crate::layout::compute_layout(&fixed, viewport);
        let findings = quality::lint(&fixed, &layout, domain);
        invalid |= quality::has_errors(&findings);
        for f in &findings {
            rep.emit(
                f.severity,
                f.rule.id(),
                &f.message,
                json!({"file": name, "path": f.path, "measured": f.measured}),
            );
        }
        println!(
            "{name}: {} repairs, {} findings ({} errors)",
            report.applied.len(),
            findings.len(),
            findings.iter().filter(|f| f.severity == Severity::Error).count()
        );
    }
    Ok(if invalid { EXIT_INVALID } else { EXIT_OK })
}

fn cmd_export(cfg: &RunConfig, records_path: &Path) -> Result<i32, CliError> {
    let out = cfg.out()?;
    let records = dataset::load_records(records_path).map_err(|e| usage(e.to_string()))?;
    export_all(&records, out, cfg.split, cfg.generation.seed)?;
    Ok(EXIT_OK)
}

fn cmd_stats(
    records: &[PathBuf],
    descriptions: &[PathBuf],
    manifests: &[PathBuf],
    reference: Option<&Path>,
    json_out: bool,
) -> Result<i32, CliError> {
    let mut all = Vec::new();
    for p in records {
        all.extend(dataset::load_records(p).map_err(|e| usage(e.to_string()))?);
    }
    let records = all;
    let mut descs: Vec<DescriptionRecord> = Vec::new();
    for p in descriptions {
        descs.extend(read_jsonl::<DescriptionRecord>(p)?);
    }
    let mut filter: Option<FilterStats> = None;
    for p in manifests {
        let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        filter = Some(match filter {
            None => m.filter,
            Some(f) => FilterStats::new(
                f.input_count + m.filter.input_count,
                f.dropped_count + m.filter.dropped_count,
                f.threshold,
            ),
        });
    }
    let reference: Option<dataset::ReferenceValues> = match reference {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let stats = dataset::compute_stats(&records, &descs);
    if json_out {
        println!(
            "{}",
            serde_json::to_string_pretty(&dataset::stats_json(&stats, filter.as_ref())).expect("stats serialize")
        );
    } else {
        print!("{}", dataset::stats_report(&stats, filter.as_ref(), reference.as_ref()));
    }
    Ok(EXIT_OK)
}

fn cmd_run(cfg: &RunConfig, pool: &rayon::ThreadPool, rep: &Reporter) -> Result<i32, CliError> {
    let domain = cfg.domain()?;
    let out = cfg.out()?;
    let client = cfg.client()?;
    let resolver = cfg.resolver();
    let scorer = cfg.scorer();
    let output =
        synth::run_pipeline(&cfg.pipeline(domain), client.as_ref(), &resolver, scorer.as_ref(), pool).map_err(stage)?;
    for w in &output.manifest.warnings {
        rep.emit(Severity::Warning, "ideate-duplicate", w, json!({}));
    }
    for r in &output.produced.rejections {
        rep.emit(
            Severity::Warning,
            "rejected",
            &format!("{}: {}", r.id, r.reasons.join("; ")),
            json!({}),
        );
    }
    write(&out.join(DESCRIPTIONS_FILE), to_jsonl(&output.descriptions).as_bytes())?;
    write_candidates(out, &output.candidates)?;
    write_production(out, &output.produced)?;
    let kept = &output.produced.kept;
    if kept.is_empty() {
        rep.emit(
            Severity::Warning,
            "empty-corpus",
            "no records survived; skipping export",
            json!({}),
        );
    } else {
        export_all(kept, out, cfg.split, cfg.generation.seed)?;
    }
    let stats = dataset::compute_stats(kept, &output.descriptions);
    let stats_json = serde_json::to_string_pretty(&dataset::stats_json(&stats, Some(&output.produced.filter)))
        .expect("stats serialize");
    write(&out.join(STATS_FILE), (stats_json + "\n").as_bytes())?;
    let manifest = write_manifest(out, output.manifest)?;
    println!(
        "{domain}: {} descriptions, {} kept, {} dropped, {} lint-rejected, {} parse-failed; filtered {}",
        manifest.counts.input,
        manifest.counts.kept,
        manifest.counts.dropped,
        manifest.counts.lint_rejected,
        manifest.counts.parse_failed,
        output.produced.filter.drop_percent()
    );
    Ok(EXIT_OK)
}

pub fn execute(cli: Cli) -> i32 {
    let rep = Reporter { json: cli.json };
    let result = (|| {
        let file = match &cli.config {
            Some(p) => load_config_file(p)?,
            None => ConfigFlags::default(),
        };
        let cfg = RunConfig::resolve(&cli.settings, &file)?;
        let pool = synth::thread_pool(cfg.jobs);
        match &cli.command {
            Command::Schema {
                action: SchemaAction::Describe,
            } => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&schema::describe()).expect("schema serializes")
                );
                Ok(EXIT_OK)
            }
            Command::Ideate => cmd_ideate(&cfg, &rep),
            Command::Synth { descriptions } => cmd_synth(&cfg, descriptions, &pool),
            Command::Produce { descriptions, markup } => cmd_produce(&cfg, descriptions, markup, &pool),
            Command::Validate { files } => cmd_validate(&cfg, files, &rep),
            Command::Export { records } => cmd_export(&cfg, records),
            Command::Stats {
                records,
                descriptions,
                manifest,
                reference,
            } => cmd_stats(records, descriptions, manifest, reference.as_deref(), cli.json),
            Command::Run => cmd_run(&cfg, &pool, &rep),
        }
    })();
    let _ = std::io::stdout().flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = match e {
                CliError::Usage(_) => "usage",
                CliError::Stage(_) => "stage-failure",
            };
            rep.emit(Severity::Error, code, e.message(), json!({}));
            e.code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Usage errors exit 1; `--help` and `--version` exit 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default())
        .filter_level(level)
        .parse_default_env()
        .try_init();
    execute(cli)
}
