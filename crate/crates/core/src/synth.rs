//! Ideation and markup generation through a pluggable text-generation client,
//! and the end-to-end production pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::align::{filter_corpus, tokens, AlignError, FilterStats, Scorer};
use crate::assets::{AssetResolver, ResolvedAsset};
use crate::dataset::{DatasetRecord, Provenance};
use crate::layout::{compute_layout, element_boxes, rasterize, Viewport};
use crate::markup::{digest_hex, parse_document, serialize_document};
use crate::quality::{lint, repair, LintFinding};
use crate::schema::{self, Domain, ScreenClass};

pub const IDEATE_TEMPLATE: &str = include_str!("../templates/ideate_v1.txt");
pub const GENERATE_TEMPLATE: &str = include_str!("../templates/generate_v1.txt");
pub const PRINCIPLES_SLIDE: &str = include_str!("../templates/principles_slide_v1.txt");
pub const PRINCIPLES_UI: &str = include_str!("../templates/principles_ui_v1.txt");
pub const TEMPLATE_VERSION: &str = "v1";
pub const LLM_KEY_ENV: &str = "STRUCTSYNTH_LLM_KEY";
pub const DEDUP_JACCARD: f64 = 0.9;
pub const DEDUP_RETRIES: u32 = 3;
pub const STUB_FILE: &str = "stub.json";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("no stub fixture for prompt digest {0}")]
    MissingFixture(String),
    #[error("client request failed: {0}")]
    Request(String),
    #[error("client returned an empty completion")]
    Empty,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("text generation failed: {0}")]
    ClientFailure(String),
    #[error(transparent)]
    Scorer(#[from] AlignError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Text generation backend. Implementations must tolerate concurrent calls.
pub trait TextGenClient: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &str, temperature: f64, seed: Option<u64>) -> Result<String, ClientError>;
}

pub fn prompt_digest(prompt: &str) -> String {
    digest_hex(prompt.as_bytes())
}

/// Replays completions from a `{prompt digest: text}` fixture map.
#[derive(Debug, Clone, Default)]
pub struct StubClient {
    fixtures: BTreeMap<String, String>,
}

impl StubClient {
    pub fn new(fixtures: BTreeMap<String, String>) -> StubClient {
        StubClient { fixtures }
    }

    /// Loads `stub.json` from `dir`, or `dir` itself when it is a file.
    pub fn load(dir: &Path) -> Result<StubClient, SynthError> {
        let file = if dir.is_dir() {
            dir.join(STUB_FILE)
        } else {
            dir.to_path_buf()
        };
        let text = std::fs::read_to_string(&file)?;
        let fixtures =
            serde_json::from_str(&text).map_err(|e| SynthError::InvalidConfig(format!("{}: {e}", file.display())))?;
        Ok(StubClient { fixtures })
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl TextGenClient for StubClient {
    fn id(&self) -> String {
        "stub".into()
    }

    fn complete(&self, prompt: &str, _: f64, _: Option<u64>) -> Result<String, ClientError> {
        let digest = prompt_digest(prompt);
        self.fixtures
            .get(&digest)
            .cloned()
            .ok_or(ClientError::MissingFixture(digest))
    }
}

/// `POST {prompt, temperature, seed?}` → `{text}`, retried on failure.
pub struct HttpClient {
    endpoint: String,
    key: Option<String>,
    retries: u32,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration) -> HttpClient {
        HttpClient {
            endpoint: endpoint.into(),
            key,
            retries: 3,
            agent: crate::assets::http_agent(timeout),
        }
    }

    pub fn from_env(endpoint: impl Into<String>, timeout: Duration) -> HttpClient {
        HttpClient::new(endpoint, std::env::var(LLM_KEY_ENV).ok(), timeout)
    }

    pub fn with_retries(mut self, retries: u32) -> HttpClient {
        self.retries = retries;
        self
    }

    fn attempt(&self, body: &str) -> Result<String, ClientError> {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let text = req
            .send(body.as_bytes())
            .map_err(|e| ClientError::Request(e.to_string()))?
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Request(e.to_string()))?;
        let reply: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ClientError::Request(format!("bad reply: {e}")))?;
        let text = reply["text"]
            .as_str()
            .ok_or_else(|| ClientError::Request("reply has no text field".into()))?;
        if text.trim().is_empty() {
            return Err(ClientError::Empty);
        }
        Ok(text.to_string())
    }
}

impl TextGenClient for HttpClient {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn complete(&self, prompt: &str, temperature: f64, seed: Option<u64>) -> Result<String, ClientError> {
        let mut body = json!({"prompt": prompt, "temperature": temperature});
        if let Some(seed) = seed {
            body["seed"] = json!(seed);
        }
        let body = body.to_string();
        let mut last = ClientError::Empty;
        for attempt in 0..=self.retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("text generation attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(last)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    /// Markup generation temperature.
    pub temperature: f64,
    pub ideation_temperature: f64,
    /// Descriptions generated concurrently per batch.
    pub batch_size: usize,
    pub seed: u64,
    /// Overrides the domain's bundled principles fragment.
    pub principles_text: Option<String>,
    /// Screen class name → weight; uniform when absent.
    pub target_weights: Option<BTreeMap<String, f64>>,
}

impl Default for GenerationConfig {
    fn default() -> GenerationConfig {
        GenerationConfig {
            temperature: 0.3,
            ideation_temperature: 0.7,
            batch_size: 8,
            seed: 0,
            principles_text: None,
            target_weights: None,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self, domain: Domain) -> Result<(), SynthError> {
        for (name, t) in [
            ("temperature", self.temperature),
            ("ideation_temperature", self.ideation_temperature),
        ] {
            if !(0.0..=2.0).contains(&t) {
                return Err(SynthError::InvalidConfig(format!("{name} {t} outside [0, 2]")));
            }
        }
        if self.batch_size == 0 {
            return Err(SynthError::InvalidConfig("batch_size must be positive".into()));
        }
        if let Some(weights) = &self.target_weights {
            let mut sum = 0.0;
            for (name, w) in weights {
                schema::canonicalize_screen(name, domain).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(SynthError::InvalidConfig(format!("weight for {name} is {w}")));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(SynthError::InvalidConfig(format!("target weights sum to {sum}, not 1")));
            }
        }
        Ok(())
    }

    pub fn principles(&self, domain: Domain) -> &str {
        self.principles_text.as_deref().unwrap_or(match domain {
            Domain::Slide => PRINCIPLES_SLIDE,
            Domain::Ui => PRINCIPLES_UI,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionRecord {
    pub id: String,
    pub domain: Domain,
    pub target_screen_class: String,
    pub text: String,
    pub prompt_digest: String,
}

pub fn description_id(domain: Domain, index: usize) -> String {
    format!("{}-{index:04}", domain.as_str())
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

fn domain_nouns(domain: Domain) -> (&'static str, &'static str) {
    match domain {
        Domain::Slide => ("presentation slides", "presentation slide"),
        Domain::Ui => ("mobile app screens", "mobile app screen"),
    }
}

fn patterns(domain: Domain) -> &'static str {
    match domain {
        Domain::Slide => "title slides, section slides, bullet lists, image with caption, comparison tables",
        Domain::Ui => "login and settings screens, scrolling lists, tab bars, forms, profile headers",
    }
}

fn join_names<'a>(names: impl Iterator<Item = &'a str>) -> String {
    names.collect::<Vec<_>>().join(", ")
}

pub fn ideation_prompt(domain: Domain, class: ScreenClass, index: usize, attempt: u32) -> String {
    let (plural, singular) = domain_nouns(domain);
    let classes = join_names(schema::screen_taxonomy(domain).into_iter().map(|c| c.name));
    fill(
        IDEATE_TEMPLATE,
        &[
            ("domain_noun", plural),
            ("domain_noun_singular", singular),
            ("screen_class", class.name),
            ("screen_classes", &classes),
            ("patterns", patterns(domain)),
            ("index", &index.to_string()),
            ("attempt", &attempt.to_string()),
        ],
    )
}

/// Element classes as they appear in generation prompts.
pub fn taxonomy_prompt_list(domain: Domain) -> String {
    join_names(schema::element_taxonomy(domain).into_iter().map(|c| c.name))
}

/// Pure function of the description, the config and the schema.
pub fn generation_prompt(desc: &DescriptionRecord, config: &GenerationConfig) -> String {
    let (_, singular) = domain_nouns(desc.domain);
    let vp = Viewport::for_domain(desc.domain);
    let classes = join_names(schema::screen_taxonomy(desc.domain).into_iter().map(|c| c.name));
    fill(
        GENERATE_TEMPLATE,
        &[
            ("domain_noun_singular", singular),
            ("viewport", &format!("{}x{}", vp.width, vp.height)),
            ("description", desc.text.trim()),
            ("principles", config.principles(desc.domain).trim_end()),
            ("taxonomy", &taxonomy_prompt_list(desc.domain)),
            ("screen_class", &desc.target_screen_class),
            ("screen_classes", &classes),
        ],
    )
}

/// Screen class targeted by each of `count` descriptions: smooth weighted
/// round-robin, which for uniform weights cycles the taxonomy in order.
pub fn target_schedule(
    domain: Domain,
    count: usize,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<Vec<ScreenClass>, SynthError> {
    let classes = schema::screen_taxonomy(domain);
    let mut w: Vec<f64> = vec![1.0; classes.len()];
    if let Some(weights) = weights {
        w = vec![0.0; classes.len()];
        for (name, weight) in weights {
            let class =
                schema::canonicalize_screen(name, domain).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
            let i = classes
                .iter()
                .position(|c| *c == class)
                .expect("canonical class is in taxonomy");
            w[i] += weight;
        }
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(SynthError::InvalidConfig("all target weights are zero".into()));
    }
    let mut current = vec![0.0; classes.len()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for (c, wi) in current.iter_mut().zip(&w) {
            *c += wi;
        }
        let best = (0..classes.len())
            .max_by(|&a, &b| current[a].total_cmp(&current[b]).then(b.cmp(&a)))
            .expect("taxonomy is non-empty");
        current[best] -= total;
        out.push(classes[best]);
    }
    Ok(out)
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, Default)]
pub struct IdeateOutcome {
    pub records: Vec<DescriptionRecord>,
    pub warnings: Vec<String>,
    /// `(index, cause)` for descriptions the client could not produce.
    pub failures: Vec<(usize, String)>,
}

pub fn ideate(
    domain: Domain,
    count: usize,
    config: &GenerationConfig,
    client: &dyn TextGenClient,
) -> Result<IdeateOutcome, SynthError> {
    if count == 0 {
        return Err(SynthError::InvalidConfig("description count must be positive".into()));
    }
    config.validate(domain)?;
    let schedule = target_schedule(domain, count, config.target_weights.as_ref())?;
    let mut out = IdeateOutcome::default();
    let mut seen: Vec<BTreeSet<String>> = Vec::new();
    for (index, class) in schedule.into_iter().enumerate() {
        let call = |attempt: u32| {
            let prompt = ideation_prompt(domain, class, index, attempt);
            client
                .complete(&prompt, config.ideation_temperature, Some(config.seed))
                .and_then(|t| {
                    let t = t.trim().to_string();
                    if t.is_empty() {
                        Err(ClientError::Empty)
                    } else {
                        Ok(t)
                    }
                })
                .map(|t| (t, prompt_digest(&prompt)))
        };
        let (mut text, mut digest) = match call(0) {
            Ok(v) => v,
            Err(e) => {
                out.failures.push((index, e.to_string()));
                continue;
            }
        };
        let is_dup = |t: &str, seen: &[BTreeSet<String>]| {
            let toks = tokens(t);
            seen.iter().any(|s| jaccard(s, &toks) >= DEDUP_JACCARD)
        };
        let mut attempt = 0;
        while is_dup(&text, &seen) {
            if attempt == DEDUP_RETRIES {
                out.warnings.push(format!(
                    "{}: near-duplicate description kept after {DEDUP_RETRIES} retries",
                    description_id(domain, index)
                ));
                break;
            }
            attempt += 1;
            match call(attempt) {
                Ok(v) => (text, digest) = v,
                Err(e) => {
                    out.warnings.push(format!(
                        "{}: near-duplicate description kept, regeneration failed: {e}",
                        description_id(domain, index)
                    ));
                    break;
                }
            }
        }
        seen.push(tokens(&text));
        out.records.push(DescriptionRecord {
            id: description_id(domain, index),
            domain,
            target_screen_class: class.name.to_string(),
            text,
            prompt_digest: digest,
        });
    }
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(out)
}

/// Returns the raw completion and the generation prompt digest.
pub fn generate_markup(
    desc: &DescriptionRecord,
    config: &GenerationConfig,
    client: &dyn TextGenClient,
) -> Result<(String, String), ClientError> {
    let prompt = generation_prompt(desc, config);
    let text = client.complete(&prompt, config.temperature, Some(config.seed))?;
    Ok((text, prompt_digest(&prompt)))
}

/// Stub-client entries that replay `pairs` of (description, markup) under
/// `config`, indexed in schedule order. Duplicate descriptions are not retried.
pub fn stub_entries(
    domain: Domain,
    pairs: &[(String, String)],
    config: &GenerationConfig,
) -> Result<BTreeMap<String, String>, SynthError> {
    let schedule = target_schedule(domain, pairs.len(), config.target_weights.as_ref())?;
    let mut out = BTreeMap::new();
    for (index, ((text, markup), class)) in pairs.iter().zip(schedule).enumerate() {
        let ideation = ideation_prompt(domain, class, index, 0);
        let desc = DescriptionRecord {
            id: description_id(domain, index),
            domain,
            target_screen_class: class.name.to_string(),
            text: text.trim().to_string(),
            prompt_digest: prompt_digest(&ideation),
        };
        out.insert(desc.prompt_digest.clone(), text.clone());
        out.insert(prompt_digest(&generation_prompt(&desc, config)), markup.clone());
    }
    Ok(out)
}

pub struct ProduceContext<'a> {
    pub domain: Domain,
    pub viewport: Viewport,
    pub seed: u64,
    pub threshold: f64,
    pub resolver: &'a AssetResolver,
    pub scorer: &'a dyn Scorer,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectStage {
    Parse,
    Lint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub stage: RejectStage,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum DocOutcome {
    Rejected(Rejection),
    Scored(Box<DatasetRecord>),
}

/// A description paired with its generated markup.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub description: DescriptionRecord,
    pub markup: String,
    pub generation_digest: String,
}

fn lint_reasons(findings: &[LintFinding]) -> Vec<String> {
    findings
        .iter()
        .filter(|f| f.severity == crate::markup::Severity::Error)
        .map(|f| match &f.path {
            Some(p) => format!("{} at {p}: {}", f.rule, f.message),
            None => format!("{}: {}", f.rule, f.message),
        })
        .collect()
}

/// parse → repair → layout → lint → assets → boxes → raster → score.
pub fn produce_one(candidate: &Candidate, ctx: &ProduceContext) -> Result<DocOutcome, AlignError> {
    let desc = &candidate.description;
    let reject = |stage, reasons| {
        Ok(DocOutcome::Rejected(Rejection {
            id: desc.id.clone(),
            stage,
            reasons,
        }))
    };
    let parsed = match parse_document(&candidate.markup, ctx.domain) {
        Ok((doc, _)) => doc,
        Err(e) => return reject(RejectStage::Parse, vec![e.to_string()]),
    };
    let (doc, report) = repair(&parsed);
    let layout = compute_layout(&doc, ctx.viewport);
    let findings = lint(&doc, &layout, ctx.domain);
    let errors = lint_reasons(&findings);
    if !errors.is_empty() {
        return reject(RejectStage::Lint, errors);
    }
    let boxes = element_boxes(&layout, &doc, ctx.viewport);
    if boxes.is_empty() {
        return reject(RejectStage::Lint, vec!["no visible labeled elements".into()]);
    }
    let assets: BTreeMap<String, ResolvedAsset> = doc
        .placeholders
        .iter()
        .map(|p| (p.id(), ctx.resolver.resolve(p, ctx.seed)))
        .collect();
    let raster = rasterize(&layout, &doc, &assets, ctx.seed).expect("every placeholder was resolved");
    let score = ctx.scorer.score(&raster, &doc, &desc.text)?;

    let mut repairs = BTreeMap::new();
    for a in &report.applied {
        *repairs.entry(a.rule.id().to_string()).or_insert(0) += 1;
    }
    let mut lint_counts = BTreeMap::new();
    for f in &findings {
        *lint_counts.entry(f.rule.id().to_string()).or_insert(0) += 1;
    }
    let mut asset_kinds = BTreeMap::new();
    let mut asset_sources = BTreeMap::new();
    for p in &doc.placeholders {
        *asset_kinds.entry(p.kind).or_insert(0) += 1;
        *asset_sources.entry(assets[&p.id()].source).or_insert(0) += 1;
    }
    let png = raster.to_png();
    Ok(DocOutcome::Scored(Box::new(DatasetRecord {
        id: desc.id.clone(),
        domain: ctx.domain,
        description: desc.text.clone(),
        raster_path: format!("images/{}.png", desc.id),
        width: raster.width,
        height: raster.height,
        boxes,
        screen_class: doc.screen_label.map(|s| s.name.to_string()),
        score: score.value,
        repairs,
        lint: lint_counts,
        assets: asset_kinds,
        asset_sources,
        provenance: Provenance {
            seed: ctx.seed,
            scorer_id: score.scorer_id,
            prompt_digest: desc.prompt_digest.clone(),
            generation_digest: candidate.generation_digest.clone(),
            markup_digest: digest_hex(serialize_document(&doc).as_bytes()),
            raster_digest: digest_hex(&png),
        },
        png: Some(Arc::new(png)),
    })))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input: usize,
    pub parse_failed: usize,
    pub lint_rejected: usize,
    pub scored: usize,
    pub kept: usize,
    pub dropped: usize,
}

impl StageCounts {
    /// kept + dropped + lint-rejected + parse-failed = input.
    pub fn balanced(&self) -> bool {
        self.kept + self.dropped + self.lint_rejected + self.parse_failed == self.input
            && self.kept + self.dropped == self.scored
    }
}

#[derive(Debug, Clone)]
pub struct ProduceOutput {
    pub kept: Vec<DatasetRecord>,
    pub dropped: Vec<DatasetRecord>,
    pub rejections: Vec<Rejection>,
    pub counts: StageCounts,
    pub filter: FilterStats,
}

pub fn thread_pool(jobs: Option<usize>) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs.filter(|n| *n > 0) {
        builder = builder.num_threads(n);
    }
    builder.build().expect("worker pool")
}

/// Runs every candidate through production in parallel; results keep input
/// order. Aborts only when the scorer is unavailable.
pub fn produce(
    candidates: &[Candidate],
    ctx: &ProduceContext,
    pool: &rayon::ThreadPool,
) -> Result<ProduceOutput, SynthError> {
    let outcomes: Vec<Result<DocOutcome, AlignError>> =
        pool.install(|| candidates.par_iter().map(|c| produce_one(c, ctx)).collect());
    let mut counts = StageCounts {
        input: candidates.len(),
        ..StageCounts::default()
    };
    let mut rejections = Vec::new();
    let mut scored = Vec::new();
    for outcome in outcomes {
        match outcome? {
            DocOutcome::Rejected(r) => {
                match r.stage {
                    RejectStage::Parse => counts.parse_failed += 1,
                    RejectStage::Lint => counts.lint_rejected += 1,
                }
                rejections.push(r);
            }
            DocOutcome::Scored(rec) => {
                let s = rec.score;
                scored.push((*rec, s));
            }
        }
    }
    counts.scored = scored.len();
    let (kept, dropped, filter) = filter_corpus(scored, ctx.threshold);
    counts.kept = kept.len();
    counts.dropped = dropped.len();
    debug_assert!(counts.balanced());
    Ok(ProduceOutput {
        kept: kept.into_iter().map(|(r, _)| r).collect(),
        dropped: dropped.into_iter().map(|(r, _)| r).collect(),
        rejections,
        counts,
        filter,
    })
}

/// Generates markup for every description, `batch_size` at a time.
pub fn synthesize(
    descriptions: &[DescriptionRecord],
    config: &GenerationConfig,
    client: &dyn TextGenClient,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Candidate>, SynthError> {
    let mut out = Vec::with_capacity(descriptions.len());
    for batch in descriptions.chunks(config.batch_size.max(1)) {
        let results: Vec<Result<Candidate, ClientError>> = pool.install(|| {
            batch
                .par_iter()
                .map(|d| {
                    generate_markup(d, config, client).map(|(markup, digest)| Candidate {
                        description: d.clone(),
                        markup,
                        generation_digest: digest,
                    })
                })
                .collect()
        });
        for (d, r) in batch.iter().zip(results) {
            out.push(r.map_err(|e| SynthError::ClientFailure(format!("{}: {e}", d.id)))?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub domain: Domain,
    pub count: usize,
    pub viewport: Viewport,
    pub threshold: f64,
    pub generation: GenerationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub template_version: String,
    pub config: PipelineConfig,
    pub client_id: String,
    pub scorer_id: String,
    pub counts: StageCounts,
    pub filter: FilterStats,
    pub warnings: Vec<String>,
    pub rejections: Vec<Rejection>,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    /// Raster digest per scored record.
    pub rasters: BTreeMap<String, String>,
    /// Output file → SHA-256, filled in once files are written.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("manifest serializes");
        serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n"
    }
}

pub struct PipelineOutput {
    pub descriptions: Vec<DescriptionRecord>,
    pub candidates: Vec<Candidate>,
    pub produced: ProduceOutput,
    pub manifest: RunManifest,
}

/// Ideation, generation and production for one domain.
pub fn run_pipeline(
    config: &PipelineConfig,
    client: &dyn TextGenClient,
    resolver: &AssetResolver,
    scorer: &dyn Scorer,
    pool: &rayon::ThreadPool,
) -> Result<PipelineOutput, SynthError> {
    if !(0.0..=1.0).contains(&config.threshold) {
        return Err(SynthError::InvalidConfig(format!(
            "threshold {} outside [0, 1]",
            config.threshold
        )));
    }
    let ideas = ideate(config.domain, config.count, &config.generation, client)?;
    if !ideas.failures.is_empty() {
        let summary: Vec<String> = ideas.failures.iter().map(|(i, e)| format!("#{i}: {e}")).collect();
        return Err(SynthError::ClientFailure(format!(
            "{} of {} descriptions failed ({})",
            ideas.failures.len(),
            config.count,
            summary.join("; ")
        )));
    }
    let candidates = synthesize(&ideas.records, &config.generation, client, pool)?;
    let ctx = ProduceContext {
        domain: config.domain,
        viewport: config.viewport,
        seed: config.generation.seed,
        threshold: config.threshold,
        resolver,
        scorer,
    };
    let produced = produce(&candidates, &ctx, pool)?;
    let manifest = manifest_for(config, &client.id(), &scorer.id(), &produced, ideas.warnings);
    Ok(PipelineOutput {
        descriptions: ideas.records,
        candidates,
        produced,
        manifest,
    })
}

pub fn manifest_for(
    config: &PipelineConfig,
    client_id: &str,
    scorer_id: &str,
    produced: &ProduceOutput,
    warnings: Vec<String>,
) -> RunManifest {
    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        template_version: TEMPLATE_VERSION.into(),
        config: config.clone(),
        client_id: client_id.into(),
        scorer_id: scorer_id.into(),
        counts: produced.counts,
        filter: produced.filter,
        warnings,
        rejections: produced.rejections.clone(),
        kept: produced.kept.iter().map(|r| r.id.clone()).collect(),
        dropped: produced.dropped.iter().map(|r| r.id.clone()).collect(),
        rasters: produced
            .kept
            .iter()
            .chain(&produced.dropped)
            .map(|r| (r.id.clone(), r.provenance.raster_digest.clone()))
            .collect(),
        outputs: BTreeMap::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::LexicalScorer;

    fn stub_for(prompts: &[(String, &str)]) -> StubClient {
        StubClient::new(prompts.iter().map(|(p, t)| (prompt_digest(p), t.to_string())).collect())
    }

    #[test]
    fn uniform_schedule_covers_every_class() {
        let s = target_schedule(Domain::Ui, 9, None).unwrap();
        let names: BTreeSet<_> = s.iter().map(|c| c.name).collect();
        assert_eq!(names.len(), 9);
        assert_eq!(s[0].name, "list");
    }

    #[test]
    fn weighted_schedule_follows_weights() {
        let weights: BTreeMap<String, f64> = [("login".to_string(), 0.75), ("menu".to_string(), 0.25)].into();
        let s = target_schedule(Domain::Ui, 8, Some(&weights)).unwrap();
        assert_eq!(s.iter().filter(|c| c.name == "login").count(), 6);
        assert_eq!(s.iter().filter(|c| c.name == "menu").count(), 2);
    }

    #[test]
    fn config_validation() {
        let mut c = GenerationConfig::default();
        assert!(c.validate(Domain::Ui).is_ok());
        c.temperature = 2.5;
        assert!(c.validate(Domain::Ui).is_err());
        let c = GenerationConfig {
            target_weights: Some([("login".to_string(), 0.5)].into()),
            ..GenerationConfig::default()
        };
        assert!(c.validate(Domain::Ui).is_err());
    }

    #[test]
    fn stub_ideation_returns_fixtures() {
        let classes = target_schedule(Domain::Slide, 3, None).unwrap();
        let texts = ["Psychology of memory", "Negotiation in teams", "Contract law basics"];
        let prompts: Vec<(String, &str)> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (ideation_prompt(Domain::Slide, *c, i, 0), texts[i]))
            .collect();
        let out = ideate(Domain::Slide, 3, &GenerationConfig::default(), &stub_for(&prompts)).unwrap();
        let got: Vec<_> = out.records.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(got, texts);
        assert!(out.warnings.is_empty() && out.failures.is_empty());
        assert_eq!(out.records[1].id, "slide-0001");
    }

    #[test]
    fn duplicate_is_regenerated_then_warned() {
        let classes = target_schedule(Domain::Ui, 2, None).unwrap();
        let dup = "A login screen with a blue sign in button";
        // Jaccard of the two token sets is 1.0, above the 0.9 cut.
        let mut prompts = vec![
            (ideation_prompt(Domain::Ui, classes[0], 0, 0), dup),
            (
                ideation_prompt(Domain::Ui, classes[1], 1, 0),
                "a LOGIN screen, with a blue sign-in button",
            ),
            (
                ideation_prompt(Domain::Ui, classes[1], 1, 1),
                "A settings page with toggles",
            ),
        ];
        let out = ideate(Domain::Ui, 2, &GenerationConfig::default(), &stub_for(&prompts)).unwrap();
        assert_eq!(out.records[1].text, "A settings page with toggles");
        assert!(out.warnings.is_empty());

        prompts.pop();
        let out = ideate(Domain::Ui, 2, &GenerationConfig::default(), &stub_for(&prompts)).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn jaccard_by_hand() {
        let a = tokens("red green blue");
        let b = tokens("red green");
        assert!((jaccard(&a, &b) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn generation_prompt_embeds_conventions() {
        let desc = DescriptionRecord {
            id: "ui-0000".into(),
            domain: Domain::Ui,
            target_screen_class: "login".into(),
            text: "A login screen".into(),
            prompt_digest: String::new(),
        };
        let config = GenerationConfig::default();
        let p = generation_prompt(&desc, &config);
        assert!(p.contains("A login screen"));
        assert!(p.contains(r#"<meta name="screentype" content="login">"#));
        assert!(p.contains(PRINCIPLES_UI.trim_end()));
        let listed = schema::element_taxonomy(Domain::Ui)
            .iter()
            .map(|c| c.name)
            .collect::<Vec<_>>()
            .join(", ");
        assert!(p.contains(&format!("exactly one of: {listed}.")));
        assert!(p.contains("628x1118"));
        assert!(!p.contains("{{"));
        assert_eq!(prompt_digest(&p), prompt_digest(&generation_prompt(&desc, &config)));
    }

    #[test]
    fn produce_accounts_for_every_candidate() {
        let desc = |id: &str, text: &str| DescriptionRecord {
            id: id.into(),
            domain: Domain::Ui,
            target_screen_class: "login".into(),
            text: text.into(),
            prompt_digest: String::new(),
        };
        let good = r#"<head><meta name="screentype" content="login"></head><body><div data-type="text">Welcome back sign in</div><img data-type="icon" src="placeholder" alt="key" width="48" height="48"></body>"#;
        let candidates = vec![
            Candidate {
                description: desc("a", "sign in welcome"),
                markup: good.into(),
                generation_digest: String::new(),
            },
            Candidate {
                description: desc("b", "unrelated words entirely"),
                markup: good.into(),
                generation_digest: String::new(),
            },
            Candidate {
                description: desc("c", "x"),
                markup: "".into(),
                generation_digest: String::new(),
            },
            Candidate {
                description: desc("d", "x"),
                markup: r#"<body><div data-type="carousel">x</div></body>"#.into(),
                generation_digest: String::new(),
            },
        ];
        let resolver = AssetResolver::offline();
        let ctx = ProduceContext {
            domain: Domain::Ui,
            viewport: Viewport::for_domain(Domain::Ui),
            seed: 1,
            threshold: 0.3,
            resolver: &resolver,
            scorer: &LexicalScorer,
        };
        let out = produce(&candidates, &ctx, &thread_pool(Some(2))).unwrap();
        assert_eq!(
            out.counts,
            StageCounts {
                input: 4,
                parse_failed: 1,
                lint_rejected: 1,
                scored: 2,
                kept: 1,
                dropped: 1
            }
        );
        assert!(out.counts.balanced());
        assert_eq!(out.kept[0].id, "a");
        assert_eq!(out.kept[0].boxes.len(), 2);
        assert_eq!(out.kept[0].screen_class.as_deref(), Some("login"));
    }
}
