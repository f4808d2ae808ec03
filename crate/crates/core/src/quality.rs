//! Heuristic repair of generated markup and principle-based linting.

use std::fmt;

use serde::Serialize;

use crate::layout::{element_boxes, LabeledBox, LayoutTree, Viewport, AUTO_FIT};
use crate::markup::style::{Keyword, PX_PER_PT};
use crate::markup::{AnnotatedDocument, Element, Length, Node, NodePath, Property, Severity, StyleDecl, Tag, Value};
use crate::schema::{Domain, ELEMENT_ATTR_NAME};

/// Minimum tap target edge for UI buttons and icons, in viewport px.
pub const MIN_TAP_TARGET_PX: u32 = 44;
/// Minimum slide body text size: 24pt.
pub const MIN_SLIDE_FONT_PX: f64 = 24.0 * PX_PER_PT;
pub const OCCLUSION_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RepairRule {
    #[serde(rename = "H1-bgfill")]
    BackgroundFill,
    #[serde(rename = "H2-imgdims")]
    ImageDims,
    #[serde(rename = "H3-menu-open")]
    MenuOpen,
    #[serde(rename = "H4-css-metadata")]
    CssMetadata,
}

impl RepairRule {
    pub fn id(self) -> &'static str {
        match self {
            RepairRule::BackgroundFill => "H1-bgfill",
            RepairRule::ImageDims => "H2-imgdims",
            RepairRule::MenuOpen => "H3-menu-open",
            RepairRule::CssMetadata => "H4-css-metadata",
        }
    }
}

impl fmt::Display for RepairRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairAction {
    pub rule: RepairRule,
    pub path: NodePath,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RepairReport {
    pub applied: Vec<RepairAction>,
}

impl RepairReport {
    pub fn is_empty(&self) -> bool {
        self.applied.is_empty()
    }

    pub fn count(&self, rule: RepairRule) -> usize {
        self.applied.iter().filter(|a| a.rule == rule).count()
    }

    pub fn to_json_lines(&self) -> String {
        self.applied
            .iter()
            .map(|a| serde_json::to_string(a).expect("repair action serializes") + "\n")
            .collect()
    }
}

fn attr_summary(e: &Element) -> String {
    let mut parts: Vec<String> = ["width", "height"]
        .iter()
        .filter_map(|k| e.attr(k).map(|v| format!("{k}={v}")))
        .collect();
    parts.extend(
        e.style
            .iter()
            .filter(|d| matches!(d.property, Property::Width | Property::Height))
            .map(|d| d.to_string()),
    );
    parts.join("; ")
}

fn declared_side(e: &Element, prop: Property, attr: &str) -> Option<Option<f64>> {
    match e.style_value(prop) {
        Some(Value::Length(Length::Auto)) => None,
        Some(Value::Length(l)) => Some(l.to_px(None)),
        _ => {
            let raw = e.attr(attr)?.trim().to_ascii_lowercase();
            if raw.is_empty() || raw == "auto" {
                return None;
            }
            let px = crate::markup::style::parse_length(&raw)
                .and_then(|l| l.to_px(None))
                .or_else(|| raw.parse::<f64>().ok().filter(|v| v.is_finite()));
            Some(px)
        }
    }
}

fn fmt_px(v: f64) -> String {
    let v = (v * 100.0).round() / 100.0;
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

// H2: give an img concrete or auto-fit dimensions on both axes.
fn repair_img_dims(e: &mut Element) -> Option<(String, String)> {
    let w = declared_side(e, Property::Width, "width");
    let h = declared_side(e, Property::Height, "height");
    if w.is_some() && h.is_some() {
        return None;
    }
    let before = attr_summary(e);
    // An explicit `auto` in the style would shadow the attribute.
    e.style.retain(|d| {
        !(matches!(d.property, Property::Width | Property::Height) && d.value == Value::Length(Length::Auto))
    });
    let (w_attr, h_attr) = match (w, h) {
        (Some(Some(w)), None) => (None, Some(fmt_px(w * 3.0 / 4.0))),
        (None, Some(Some(h))) => (Some(fmt_px(h * 4.0 / 3.0)), None),
        (None, None) => (Some(AUTO_FIT.to_string()), Some(AUTO_FIT.to_string())),
        (Some(_), None) => (None, Some(AUTO_FIT.to_string())),
        (None, Some(_)) => (Some(AUTO_FIT.to_string()), None),
        (Some(_), Some(_)) => unreachable!(),
    };
    if let Some(v) = w_attr {
        e.attrs.insert("width".into(), v);
    }
    if let Some(v) = h_attr {
        e.attrs.insert("height".into(), v);
    }
    Some((before, attr_summary(e)))
}

// H3: force a sliding menu visible and pull its origin into the viewport.
fn repair_menu(e: &mut Element, viewport: Viewport) -> Option<(String, String)> {
    let before = crate::markup::style::serialize_style(&e.style);
    let mut changed = false;
    for d in e.style.iter_mut() {
        if d.property == Property::Display && d.value == Value::Keyword(Keyword::None) {
            d.value = Value::Keyword(Keyword::Block);
            changed = true;
        }
    }
    let positioned = e
        .style_value(Property::Position)
        .is_some_and(|v| matches!(v, Value::Keyword(Keyword::Absolute) | Value::Keyword(Keyword::Relative)));
    if positioned {
        for d in e.style.iter_mut() {
            let max = match d.property {
                Property::Left => viewport.width as f64 - 1.0,
                Property::Top => viewport.height as f64 - 1.0,
                Property::Right | Property::Bottom => f64::INFINITY,
                _ => continue,
            };
            let Value::Length(l) = d.value else { continue };
            let (v, rebuild): (f64, fn(f64) -> Length) = match l {
                Length::Px(v) => (v, Length::Px),
                Length::Pt(v) => (v, Length::Pt),
                Length::Percent(v) => (v, Length::Percent),
                Length::Auto => continue,
            };
            let max = match l {
                Length::Pt(_) => max / PX_PER_PT,
                Length::Percent(_) if max.is_finite() => 99.0,
                _ => max,
            };
            let clamped = v.clamp(0.0, max.max(0.0));
            if clamped != v {
                d.value = Value::Length(rebuild(clamped));
                changed = true;
            }
        }
    }
    changed.then(|| (before, crate::markup::style::serialize_style(&e.style)))
}

fn skip_ws_and_comments(b: &[u8], mut i: usize, forward: bool) -> usize {
    // Backward scans return the index just past the previous significant byte.
    if forward {
        loop {
            while i < b.len() && b[i].is_ascii_whitespace() {
                i += 1;
            }
            if b[i..].starts_with(b"/*") {
                i = match find(b, i + 2, b"*/") {
                    Some(j) => j + 2,
                    None => b.len(),
                };
            } else {
                return i;
            }
        }
    } else {
        loop {
            while i > 0 && b[i - 1].is_ascii_whitespace() {
                i -= 1;
            }
            if i >= 2 && &b[i - 2..i] == b"*/" {
                i = rfind(b, i - 2, b"/*").unwrap_or_default();
            } else {
                return i;
            }
        }
    }
}

fn find(b: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    (from..=b.len().saturating_sub(needle.len())).find(|&i| b[i..].starts_with(needle))
}

fn rfind(b: &[u8], before: usize, needle: &[u8]) -> Option<usize> {
    (0..before.saturating_sub(needle.len() - 1))
        .rev()
        .find(|&i| b[i..].starts_with(needle))
}

/// Byte ranges of `data-type` declarations inside CSS text: the name must
/// start a declaration and be followed by `:` or `=`. Each range runs through
/// the terminating `;`, or up to (not including) the closing `}`.
pub fn css_metadata_spans(css: &str) -> Vec<(usize, usize)> {
    let b = css.as_bytes();
    let name = ELEMENT_ATTR_NAME.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i + name.len() <= b.len() {
        if b[i..].starts_with(b"/*") {
            i = find(b, i + 2, b"*/").map_or(b.len(), |j| j + 2);
            continue;
        }
        if !b[i..i + name.len()].eq_ignore_ascii_case(name) {
            i += 1;
            continue;
        }
        let prev = skip_ws_and_comments(b, i, false);
        let starts_decl = prev == 0 || matches!(b[prev - 1], b'{' | b';');
        let after = skip_ws_and_comments(b, i + name.len(), true);
        let is_prop = after < b.len() && matches!(b[after], b':' | b'=');
        if !(starts_decl && is_prop) {
            i += 1;
            continue;
        }
        let mut end = after;
        while end < b.len() && b[end] != b';' && b[end] != b'}' {
            end += 1;
        }
        if end < b.len() && b[end] == b';' {
            end += 1;
        }
        spans.push((i, end));
        i = end;
    }
    spans
}

/// Removes every `data-type` declaration from a stylesheet.
pub fn strip_css_metadata(css: &str) -> (String, Vec<String>) {
    let mut out = String::with_capacity(css.len());
    let mut removed = Vec::new();
    let mut last = 0;
    for (s, e) in css_metadata_spans(css) {
        out.push_str(&css[last..s]);
        removed.push(css[s..e].to_string());
        last = e;
    }
    out.push_str(&css[last..]);
    (out, removed)
}

fn has_background_image(e: &Element) -> bool {
    matches!(e.style_value(Property::BackgroundImage), Some(Value::Url(_)))
}

fn is_sliding_menu(e: &Element, domain: Domain) -> bool {
    e.attr(ELEMENT_ATTR_NAME)
        .and_then(|raw| crate::schema::canonicalize_label(raw, domain).ok())
        .is_some_and(|c| c.name == "sliding menu")
}

/// Applies H1 to H4. Total: every document comes back, possibly unchanged.
pub fn repair(doc: &AnnotatedDocument) -> (AnnotatedDocument, RepairReport) {
    let viewport = Viewport::for_domain(doc.domain);
    let domain = doc.domain;
    let mut root = doc.root.clone();
    let mut report = RepairReport::default();

    fn visit(e: &mut Element, path: &mut NodePath, domain: Domain, viewport: Viewport, report: &mut RepairReport) {
        let mut log = |rule, (before, after): (String, String), path: &NodePath| {
            report.applied.push(RepairAction {
                rule,
                path: path.clone(),
                before,
                after,
            })
        };
        if has_background_image(e) && e.style.iter().any(|d| d.property == Property::BackgroundColor) {
            let before = crate::markup::style::serialize_style(&e.style);
            e.style.retain(|d: &StyleDecl| d.property != Property::BackgroundColor);
            log(
                RepairRule::BackgroundFill,
                (before, crate::markup::style::serialize_style(&e.style)),
                path,
            );
        }
        if e.tag == Tag::Img {
            if let Some(change) = repair_img_dims(e) {
                log(RepairRule::ImageDims, change, path);
            }
        }
        if is_sliding_menu(e, domain) {
            if let Some(change) = repair_menu(e, viewport) {
                log(RepairRule::MenuOpen, change, path);
            }
        }
        if e.tag == Tag::Style {
            for c in e.children.iter_mut() {
                if let Node::Text(css) = c {
                    let (clean, removed) = strip_css_metadata(css);
                    if !removed.is_empty() {
                        log(RepairRule::CssMetadata, (removed.join(" "), String::new()), path);
                        *css = clean;
                    }
                }
            }
        }
        for (i, c) in e.children.iter_mut().enumerate() {
            if let Node::Element(child) = c {
                path.0.push(i);
                visit(child, path, domain, viewport, report);
                path.0.pop();
            }
        }
    }

    visit(&mut root, &mut NodePath::root(), domain, viewport, &mut report);
    if report.is_empty() {
        return (doc.clone(), report);
    }
    for a in &report.applied {
        log::info!("{} at {}: {:?} -> {:?}", a.rule, a.path, a.before, a.after);
    }
    let (repaired, _) = AnnotatedDocument::from_root(root, domain, doc.source_hash.clone());
    (repaired, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum LintRule {
    #[serde(rename = "P1-tap-target")]
    TapTarget,
    #[serde(rename = "P1-slide-font")]
    SlideFont,
    #[serde(rename = "P3-unknown-label")]
    UnknownLabel,
    #[serde(rename = "P3-missing-screen-label")]
    MissingScreenLabel,
    #[serde(rename = "OV-overflow")]
    Overflow,
    #[serde(rename = "OC-occlusion")]
    Occlusion,
}

impl LintRule {
    pub fn id(self) -> &'static str {
        match self {
            LintRule::TapTarget => "P1-tap-target",
            LintRule::SlideFont => "P1-slide-font",
            LintRule::UnknownLabel => "P3-unknown-label",
            LintRule::MissingScreenLabel => "P3-missing-screen-label",
            LintRule::Overflow => "OV-overflow",
            LintRule::Occlusion => "OC-occlusion",
        }
    }

    /// Missing or unknown labels make a record unusable as training data; the
    /// rest are quality warnings.
    pub fn severity(self) -> Severity {
        match self {
            LintRule::UnknownLabel | LintRule::MissingScreenLabel => Severity::Error,
            _ => Severity::Warning,
        }
    }
}

impl fmt::Display for LintRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintFinding {
    pub rule: LintRule,
    pub severity: Severity,
    pub path: Option<NodePath>,
    /// Box size in px, font size in px, or IoMin, depending on the rule.
    pub measured: Option<String>,
    pub message: String,
}

impl LintFinding {
    fn new(rule: LintRule, path: Option<NodePath>, measured: Option<String>, message: String) -> LintFinding {
        LintFinding {
            rule,
            severity: rule.severity(),
            path,
            measured,
            message,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("lint finding serializes")
    }
}

/// Intersection over the smaller box's area.
pub fn io_min(a: &crate::layout::PixelBox, b: &crate::layout::PixelBox) -> f64 {
    let min = a.area().min(b.area());
    if min == 0 {
        return 0.0;
    }
    a.intersection_area(b) as f64 / min as f64
}

fn occluding_pairs(boxes: &[LabeledBox]) -> impl Iterator<Item = (&LabeledBox, &LabeledBox, f64)> {
    boxes.iter().enumerate().flat_map(move |(i, a)| {
        boxes[i + 1..].iter().filter_map(move |b| {
            if a.path.is_ancestor_of(&b.path) || b.path.is_ancestor_of(&a.path) {
                None
            } else {
                Some((a, b, io_min(&a.bbox, &b.bbox)))
            }
        })
    })
}

/// Largest IoMin over labeled pairs where neither contains the other in the
/// tree; 0 with fewer than two boxes.
pub fn occlusion_score(boxes: &[LabeledBox]) -> f64 {
    occluding_pairs(boxes).map(|(_, _, s)| s).fold(0.0, f64::max)
}

pub fn lint(doc: &AnnotatedDocument, layout: &LayoutTree, domain: Domain) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for u in &doc.unknown_labels {
        out.push(LintFinding::new(
            LintRule::UnknownLabel,
            Some(u.path.clone()),
            None,
            format!("unknown {} label {:?}", domain, u.raw),
        ));
    }
    if doc.screen_label.is_none() {
        out.push(LintFinding::new(
            LintRule::MissingScreenLabel,
            None,
            None,
            "no screentype meta".into(),
        ));
    }
    let boxes = element_boxes(layout, doc, layout.viewport);
    for b in &boxes {
        match (domain, b.class.as_str()) {
            (Domain::Ui, "text button" | "icon") => {
                if b.bbox.w < MIN_TAP_TARGET_PX || b.bbox.h < MIN_TAP_TARGET_PX {
                    out.push(LintFinding::new(
                        LintRule::TapTarget,
                        Some(b.path.clone()),
                        Some(format!("{}x{}", b.bbox.w, b.bbox.h)),
                        format!("{} smaller than {0}x{0}", MIN_TAP_TARGET_PX),
                    ));
                }
            }
            (Domain::Slide, "text box") => {
                let size = layout.nodes.get(&b.path).map_or(0.0, |n| n.font_size);
                if size < MIN_SLIDE_FONT_PX - 1e-9 {
                    out.push(LintFinding::new(
                        LintRule::SlideFont,
                        Some(b.path.clone()),
                        Some(format!("{}px", fmt_px(size))),
                        format!("font below 24pt ({}px)", fmt_px(MIN_SLIDE_FONT_PX)),
                    ));
                }
            }
            _ => {}
        }
    }
    for path in &layout.overflow {
        out.push(LintFinding::new(
            LintRule::Overflow,
            Some(path.clone()),
            None,
            "content overflows its box".into(),
        ));
    }
    for (a, b, score) in occluding_pairs(&boxes) {
        if score > OCCLUSION_THRESHOLD {
            out.push(LintFinding::new(
                LintRule::Occlusion,
                Some(b.path.clone()),
                Some(format!("{score:.3}")),
                format!("{} ({}) occludes {} ({})", b.class, b.path, a.class, a.path),
            ));
        }
    }
    out
}

pub fn has_errors(findings: &[LintFinding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}
