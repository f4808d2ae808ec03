//! Image/text alignment scoring and threshold filtering.

use std::collections::BTreeSet;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::layout::RasterImage;
use crate::markup::AnnotatedDocument;

pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const LEXICAL_SCORER_ID: &str = "lexical-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub value: f64,
    pub scorer_id: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignError {
    #[error("description is empty")]
    EmptyDescription,
    #[error("scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("scorer protocol violation: {0}")]
    ProtocolViolation(String),
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Fraction of the description's distinct tokens present in the document.
pub fn lexical_score(doc_text: &str, description: &str) -> Result<AlignmentScore, AlignError> {
    let desc = tokens(description);
    if desc.is_empty() {
        return Err(AlignError::EmptyDescription);
    }
    let doc = tokens(doc_text);
    let hits = desc.intersection(&doc).count();
    Ok(AlignmentScore {
        value: hits as f64 / desc.len() as f64,
        scorer_id: LEXICAL_SCORER_ID.into(),
    })
}

pub trait Scorer: Send + Sync {
    fn id(&self) -> String;
    fn score(
        &self,
        raster: &RasterImage,
        doc: &AnnotatedDocument,
        description: &str,
    ) -> Result<AlignmentScore, AlignError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl Scorer for LexicalScorer {
    fn id(&self) -> String {
        LEXICAL_SCORER_ID.into()
    }

    fn score(&self, _: &RasterImage, doc: &AnnotatedDocument, description: &str) -> Result<AlignmentScore, AlignError> {
        lexical_score(&doc.extract_text(), description)
    }
}

/// `POST {image: base64 PNG, text}` → `{score}`.
pub struct RemoteScorer {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> RemoteScorer {
        RemoteScorer {
            endpoint: endpoint.into(),
            agent: crate::assets::http_agent(timeout),
        }
    }
}

#[derive(Deserialize)]
struct ScoreReply {
    score: f64,
}

impl Scorer for RemoteScorer {
    fn id(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn score(
        &self,
        raster: &RasterImage,
        _: &AnnotatedDocument,
        description: &str,
    ) -> Result<AlignmentScore, AlignError> {
        if tokens(description).is_empty() {
            return Err(AlignError::EmptyDescription);
        }
        let image = base64::engine::general_purpose::STANDARD.encode(raster.to_png());
        let body = json!({"image": image, "text": description}).to_string();
        let text = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body.as_bytes())
            .map_err(|e| AlignError::ScorerUnavailable(e.to_string()))?
            .body_mut()
            .read_to_string()
            .map_err(|e| AlignError::ScorerUnavailable(e.to_string()))?;
        let reply: ScoreReply =
            serde_json::from_str(&text).map_err(|e| AlignError::ProtocolViolation(e.to_string()))?;
        if !(0.0..=1.0).contains(&reply.score) {
            return Err(AlignError::ProtocolViolation(format!(
                "score {} outside [0, 1]",
                reply.score
            )));
        }
        Ok(AlignmentScore {
            value: reply.score,
            scorer_id: self.id(),
        })
    }
}

pub fn score_with(
    scorer: &dyn Scorer,
    raster: &RasterImage,
    doc: &AnnotatedDocument,
    description: &str,
) -> Result<AlignmentScore, AlignError> {
    scorer.score(raster, doc, description)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input_count: usize,
    pub kept_count: usize,
    pub dropped_count: usize,
    pub drop_fraction: f64,
    pub threshold: f64,
}

impl FilterStats {
    pub fn new(input: usize, dropped: usize, threshold: f64) -> FilterStats {
        FilterStats {
            input_count: input,
            kept_count: input - dropped,
            dropped_count: dropped,
            drop_fraction: if input == 0 { 0.0 } else { dropped as f64 / input as f64 },
            threshold,
        }
    }

    pub fn drop_percent(&self) -> String {
        format_percent(self.dropped_count as u64, self.input_count as u64)
    }
}

pub type Scored<T> = Vec<(T, f64)>;

/// Keeps scores at or above `threshold`; order is preserved on both sides.
pub fn filter_corpus<T>(items: Scored<T>, threshold: f64) -> (Scored<T>, Scored<T>, FilterStats) {
    let input = items.len();
    let (kept, dropped): (Vec<_>, Vec<_>) = items.into_iter().partition(|(_, s)| *s >= threshold);
    let stats = FilterStats::new(input, dropped.len(), threshold);
    (kept, dropped, stats)
}

/// `num / den` as a percentage: two decimals when that is exact, else one.
pub fn format_percent(num: u64, den: u64) -> String {
    if den == 0 {
        return "0.0%".into();
    }
    // Work in hundredths of a percent to stay exact.
    let scaled = num as u128 * 10_000;
    let den = den as u128;
    if scaled.is_multiple_of(den) {
        let hundredths = scaled / den;
        let (int, frac) = (hundredths / 100, hundredths % 100);
        return if frac % 10 == 0 {
            format!("{int}.{}%", frac / 10)
        } else {
            format!("{int}.{frac:02}%")
        };
    }
    let tenths = (num as u128 * 1000 * 2 + den) / (2 * den);
    format!("{}.{}%", tenths / 10, tenths % 10)
}
