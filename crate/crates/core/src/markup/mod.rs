//! The annotated markup dialect: a tolerant parser, the document tree with its
//! extracted labels and placeholders, and a canonical serializer.

mod parser;
mod serialize;
pub mod style;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assets::{self, AssetKind, PlaceholderSpec};
use crate::schema::{self, Domain, ElementClass, ScreenClass, ELEMENT_ATTR_NAME, SCREEN_META_NAME};

pub use parser::{parse_bytes, parse_document};
pub use serialize::serialize_document;
pub use style::{Length, Property, Rgba, StyleDecl, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarkupError {
    #[error("fatal parse error: {0}")]
    FatalParse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Html,
    Head,
    Body,
    Meta,
    Style,
    Div,
    Span,
    P,
    H1,
    H2,
    H3,
    Ul,
    Li,
    Img,
    Button,
    Input,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Html => "html",
            Tag::Head => "head",
            Tag::Body => "body",
            Tag::Meta => "meta",
            Tag::Style => "style",
            Tag::Div => "div",
            Tag::Span => "span",
            Tag::P => "p",
            Tag::H1 => "h1",
            Tag::H2 => "h2",
            Tag::H3 => "h3",
            Tag::Ul => "ul",
            Tag::Li => "li",
            Tag::Img => "img",
            Tag::Button => "button",
            Tag::Input => "input",
        }
    }

    pub fn from_name(name: &str) -> Option<Tag> {
        Some(match name {
            "html" => Tag::Html,
            "head" => Tag::Head,
            "body" => Tag::Body,
            "meta" => Tag::Meta,
            "style" => Tag::Style,
            "div" => Tag::Div,
            "span" => Tag::Span,
            "p" => Tag::P,
            "h1" => Tag::H1,
            "h2" => Tag::H2,
            "h3" => Tag::H3,
            "ul" => Tag::Ul,
            "li" => Tag::Li,
            "img" => Tag::Img,
            "button" => Tag::Button,
            "input" => Tag::Input,
            _ => return None,
        })
    }

    pub fn is_void(self) -> bool {
        matches!(self, Tag::Img | Tag::Input | Tag::Meta)
    }
}

/// Line/column (1-based) of an element's start tag in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SourcePos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub tag: Tag,
    /// Lowercase keys; the `style` attribute lives in `style` instead.
    pub attrs: BTreeMap<String, String>,
    pub style: Vec<StyleDecl>,
    pub children: Vec<Node>,
    pub(crate) pos: Option<SourcePos>,
}

// Source positions are not part of a document's structure.
impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag
            && self.attrs == other.attrs
            && self.style == other.style
            && self.children == other.children
    }
}

impl Element {
    pub fn new(tag: Tag) -> Element {
        Element {
            tag,
            attrs: BTreeMap::new(),
            style: Vec::new(),
            children: Vec::new(),
            pos: None,
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.get(name).map(String::as_str)
    }

    /// Last declaration of `property` wins.
    pub fn style_value(&self, property: Property) -> Option<&Value> {
        self.style
            .iter()
            .rev()
            .find(|d| d.property == property)
            .map(|d| &d.value)
    }

    pub fn child_elements(&self) -> impl Iterator<Item = (usize, &Element)> {
        self.children.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Element(e) => Some((i, e)),
            Node::Text(_) => None,
        })
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                Node::Element(e) => e.node_count(),
                Node::Text(_) => 1,
            })
            .sum::<usize>()
    }

    pub fn at_path(&self, path: &NodePath) -> Option<&Node> {
        let (first, rest) = path.0.split_first()?;
        let mut node = self.children.get(*first)?;
        for &i in rest {
            match node {
                Node::Element(e) => node = e.children.get(i)?,
                Node::Text(_) => return None,
            }
        }
        Some(node)
    }

    pub fn element_at(&self, path: &NodePath) -> Option<&Element> {
        if path.0.is_empty() {
            return Some(self);
        }
        match self.at_path(path)? {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        }
    }

    pub fn element_at_mut(&mut self, path: &NodePath) -> Option<&mut Element> {
        let mut cur = self;
        for &i in &path.0 {
            match cur.children.get_mut(i)? {
                Node::Element(e) => cur = e,
                Node::Text(_) => return None,
            }
        }
        Some(cur)
    }

    /// Pre-order walk over elements with their paths (relative to `self`).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&NodePath, &'a Element)) {
        fn go<'a>(e: &'a Element, path: &mut NodePath, f: &mut impl FnMut(&NodePath, &'a Element)) {
            f(path, e);
            for (i, c) in e.child_elements() {
                path.0.push(i);
                go(c, path, f);
                path.0.pop();
            }
        }
        go(self, &mut NodePath::root(), f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Element(Element),
    Text(String),
}

/// Child indices from the `<html>` root; the root itself is the empty path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> NodePath {
        NodePath(Vec::new())
    }

    pub fn child(&self, index: usize) -> NodePath {
        let mut v = self.0.clone();
        v.push(index);
        NodePath(v)
    }

    pub fn is_ancestor_of(&self, other: &NodePath) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("/")?;
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("/"))
    }
}

impl std::str::FromStr for NodePath {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim_start_matches('/');
        if s.is_empty() {
            return Ok(NodePath::root());
        }
        s.split('/').map(str::parse).collect::<Result<_, _>>().map(NodePath)
    }
}

impl Serialize for NodePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub line: Option<u32>,
    pub col: Option<u32>,
    pub path: Option<NodePath>,
}

impl Diagnostic {
    pub(crate) fn new(severity: Severity, code: &str, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity,
            code: code.to_string(),
            message: message.into(),
            line: None,
            col: None,
            path: None,
        }
    }

    pub(crate) fn at(mut self, pos: Option<SourcePos>, path: Option<&NodePath>) -> Diagnostic {
        if let Some(p) = pos {
            self.line = Some(p.line);
            self.col = Some(p.col);
        }
        self.path = path.cloned();
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementLabel {
    pub path: NodePath,
    pub class: ElementClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnknownLabel {
    pub path: NodePath,
    pub raw: String,
}

#[derive(Debug, Clone)]
pub struct AnnotatedDocument {
    pub domain: Domain,
    /// The `<html>` element; always has a `<head>` and a `<body>` child.
    pub root: Element,
    pub element_labels: Vec<ElementLabel>,
    pub unknown_labels: Vec<UnknownLabel>,
    pub screen_label: Option<ScreenClass>,
    pub placeholders: Vec<PlaceholderSpec>,
    /// Hex SHA-256 of the text this document was parsed from.
    pub source_hash: String,
}

impl AnnotatedDocument {
    /// Rebuilds the derived annotation fields from `root`.
    pub fn from_root(root: Element, domain: Domain, source_hash: String) -> (AnnotatedDocument, Vec<Diagnostic>) {
        let mut diags = Vec::new();
        let mut doc = AnnotatedDocument {
            domain,
            root,
            element_labels: Vec::new(),
            unknown_labels: Vec::new(),
            screen_label: None,
            placeholders: Vec::new(),
            source_hash,
        };
        doc.derive(&mut diags);
        (doc, diags)
    }

    fn derive(&mut self, diags: &mut Vec<Diagnostic>) {
        let domain = self.domain;
        let mut labels = Vec::new();
        let mut unknown = Vec::new();
        let mut screen: Option<ScreenClass> = None;
        let mut placeholders = Vec::new();

        // Labels of the enclosing labeled elements, innermost last.
        #[allow(clippy::type_complexity)]
        fn go(
            e: &Element,
            path: &mut NodePath,
            ancestors: &mut Vec<ElementClass>,
            domain: Domain,
            out: &mut (
                &mut Vec<ElementLabel>,
                &mut Vec<UnknownLabel>,
                &mut Option<ScreenClass>,
                &mut Vec<PlaceholderSpec>,
                &mut Vec<Diagnostic>,
            ),
        ) {
            let mut pushed = false;
            if e.tag == Tag::Meta && e.attr("name").map(str::to_ascii_lowercase).as_deref() == Some(SCREEN_META_NAME) {
                let content = e.attr("content").unwrap_or("");
                match schema::canonicalize_screen(content, domain) {
                    Ok(class) if out.2.is_none() => *out.2 = Some(class),
                    Ok(_) => out.4.push(
                        Diagnostic::new(
                            Severity::Warning,
                            "duplicate-screen-label",
                            "extra screentype meta ignored",
                        )
                        .at(e.pos, Some(path)),
                    ),
                    Err(err) => out.4.push(
                        Diagnostic::new(Severity::Error, "unknown-screen-class", err.to_string()).at(e.pos, Some(path)),
                    ),
                }
            }
            if let Some(raw) = e.attr(ELEMENT_ATTR_NAME) {
                match schema::canonicalize_label(raw, domain) {
                    Ok(class) => {
                        out.0.push(ElementLabel {
                            path: path.clone(),
                            class,
                        });
                        ancestors.push(class);
                        pushed = true;
                    }
                    Err(err) => {
                        out.1.push(UnknownLabel {
                            path: path.clone(),
                            raw: raw.to_string(),
                        });
                        out.4.push(
                            Diagnostic::new(Severity::Error, "unknown-label", err.to_string()).at(e.pos, Some(path)),
                        );
                    }
                }
            }
            if e.tag == Tag::Img && assets::is_placeholder_src(e.attr("src")) {
                let kind = ancestors.last().map_or(AssetKind::Image, |c| AssetKind::for_class(*c));
                out.3.push(PlaceholderSpec::from_img(path.clone(), e, kind));
            }
            for (i, c) in e.child_elements() {
                path.0.push(i);
                go(c, path, ancestors, domain, out);
                path.0.pop();
            }
            if pushed {
                ancestors.pop();
            }
        }

        go(
            &self.root,
            &mut NodePath::root(),
            &mut Vec::new(),
            domain,
            &mut (&mut labels, &mut unknown, &mut screen, &mut placeholders, diags),
        );
        self.element_labels = labels;
        self.unknown_labels = unknown;
        self.screen_label = screen;
        self.placeholders = placeholders;
    }

    pub fn body_path(&self) -> NodePath {
        self.root
            .child_elements()
            .find(|(_, e)| e.tag == Tag::Body)
            .map(|(i, _)| NodePath(vec![i]))
            .unwrap_or_default()
    }

    pub fn body(&self) -> &Element {
        self.root.element_at(&self.body_path()).unwrap_or(&self.root)
    }

    /// Structural equality: tree, labels, screen label and placeholders.
    pub fn structurally_eq(&self, other: &AnnotatedDocument) -> bool {
        self.domain == other.domain
            && self.root == other.root
            && self.element_labels == other.element_labels
            && self.unknown_labels == other.unknown_labels
            && self.screen_label == other.screen_label
            && self.placeholders == other.placeholders
    }

    /// Text runs and alt texts of the body in document order, then the screen
    /// label, joined by single spaces.
    pub fn extract_text(&self) -> String {
        fn go(e: &Element, out: &mut Vec<String>) {
            if e.tag == Tag::Img {
                if let Some(alt) = e.attr("alt").map(str::trim).filter(|a| !a.is_empty()) {
                    out.push(alt.split_whitespace().collect::<Vec<_>>().join(" "));
                }
            }
            if e.tag == Tag::Style {
                return;
            }
            for c in &e.children {
                match c {
                    Node::Text(t) => out.push(t.clone()),
                    Node::Element(child) => go(child, out),
                }
            }
        }
        let mut parts = Vec::new();
        go(self.body(), &mut parts);
        if let Some(screen) = self.screen_label {
            parts.push(screen.name.to_string());
        }
        parts.retain(|p| !p.is_empty());
        parts.join(" ")
    }

    /// Verbatim contents of every `<style>` block, in document order.
    pub fn style_blocks(&self) -> Vec<(NodePath, &str)> {
        let mut out = Vec::new();
        self.root.walk(&mut |path, e| {
            if e.tag == Tag::Style {
                let css = e.children.iter().find_map(|c| match c {
                    Node::Text(t) => Some(t.as_str()),
                    Node::Element(_) => None,
                });
                out.push((path.clone(), css.unwrap_or("")));
            }
        });
        out
    }

    pub fn label_at(&self, path: &NodePath) -> Option<ElementClass> {
        self.element_labels.iter().find(|l| &l.path == path).map(|l| l.class)
    }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Extract document text; free-function form of [`AnnotatedDocument::extract_text`].
pub fn extract_text(doc: &AnnotatedDocument) -> String {
    doc.extract_text()
}
