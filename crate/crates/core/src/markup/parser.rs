use std::collections::BTreeMap;

use super::style::{parse_inline_style, StyleWarning};
use super::{digest_hex, AnnotatedDocument, Diagnostic, Element, MarkupError, Node, Severity, SourcePos, Tag};
use crate::schema::Domain;

// Void in HTML but outside the dialect; they become empty divs.
const FOREIGN_VOID: &[&str] = &[
    "br", "hr", "link", "source", "area", "col", "embed", "wbr", "base", "track", "param",
];
// Raw-text elements whose contents are discarded.
const DROPPED_RAW: &[&str] = &["script", "noscript", "template", "svg", "canvas"];

enum Token {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
        offset: usize,
    },
    End {
        name: String,
        offset: usize,
    },
    Text(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn advance_to(&mut self, needle: &str) {
        match self.rest().find(needle) {
            Some(i) => self.pos += i + needle.len(),
            None => self.pos = self.src.len(),
        }
    }

    /// Contents up to the case-insensitive `</name`, consuming the end tag.
    fn raw_text(&mut self, name: &str) -> &'a str {
        let start = self.pos;
        let close = format!("</{name}");
        let hay = self.rest().to_ascii_lowercase();
        match hay.find(&close) {
            Some(i) => {
                let text = &self.src[start..start + i];
                self.pos = start + i;
                self.advance_to(">");
                text
            }
            None => {
                self.pos = self.src.len();
                &self.src[start..]
            }
        }
    }

    fn next(&mut self) -> Option<Token> {
        loop {
            if self.pos >= self.src.len() {
                return None;
            }
            if self.rest().starts_with("<!--") {
                self.advance_to("-->");
                continue;
            }
            if self.rest().starts_with("<!") || self.rest().starts_with("<?") {
                self.advance_to(">");
                continue;
            }
            let bytes = self.rest().as_bytes();
            if bytes[0] == b'<' && bytes.len() > 1 {
                if bytes[1] == b'/' && bytes.get(2).is_some_and(u8::is_ascii_alphabetic) {
                    let offset = self.pos;
                    self.pos += 2;
                    let name = self.take_name();
                    self.advance_to(">");
                    return Some(Token::End { name, offset });
                }
                if bytes[1].is_ascii_alphabetic() {
                    let offset = self.pos;
                    self.pos += 1;
                    let name = self.take_name();
                    let (attrs, self_closing) = self.take_attrs();
                    return Some(Token::Start {
                        name,
                        attrs,
                        self_closing,
                        offset,
                    });
                }
            }
            // Text up to the next plausible tag start.
            let start = self.pos;
            let mut end = self.src.len();
            for (i, _) in self.rest().char_indices().skip(1) {
                if self.rest()[i..].starts_with('<') {
                    end = start + i;
                    break;
                }
            }
            self.pos = end;
            return Some(Token::Text(decode_entities(&self.src[start..end])));
        }
    }

    fn take_name(&mut self) -> String {
        let rest = self.rest();
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '>' || c == '/')
            .unwrap_or(rest.len());
        self.pos += len;
        rest[..len].to_ascii_lowercase()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    fn take_attrs(&mut self) -> (Vec<(String, String)>, bool) {
        let mut attrs = Vec::new();
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.is_empty() {
                return (attrs, false);
            }
            if rest.starts_with("/>") {
                self.pos += 2;
                return (attrs, true);
            }
            if rest.starts_with('>') {
                self.pos += 1;
                return (attrs, false);
            }
            if rest.starts_with('/') {
                self.pos += 1;
                continue;
            }
            let len = rest
                .find(|c: char| c.is_whitespace() || c == '=' || c == '>' || c == '/')
                .unwrap_or(rest.len());
            let len = if len == 0 {
                rest.chars().next().map_or(1, char::len_utf8)
            } else {
                len
            };
            let name = rest[..len].to_ascii_lowercase();
            self.pos += len;
            self.skip_ws();
            let mut value = String::new();
            if self.rest().starts_with('=') {
                self.pos += 1;
                self.skip_ws();
                let rest = self.rest();
                if let Some(q) = rest.chars().next().filter(|c| *c == '"' || *c == '\'') {
                    let body = &rest[1..];
                    let end = body.find(q).unwrap_or(body.len());
                    value = decode_entities(&body[..end]);
                    self.pos += 1 + end + usize::from(end < body.len());
                } else {
                    let end = rest.find(|c: char| c.is_whitespace() || c == '>').unwrap_or(rest.len());
                    value = decode_entities(&rest[..end]);
                    self.pos += end;
                }
            }
            attrs.push((name, value));
        }
    }
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let window = rest.char_indices().nth(12).map_or(rest.len(), |(i, _)| i);
        let Some(semi) = rest[..window].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some('\u{a0}'),
            _ => entity
                .strip_prefix("#x")
                .or_else(|| entity.strip_prefix("#X"))
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                .and_then(char::from_u32),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct LineIndex(Vec<usize>);

impl LineIndex {
    fn new(src: &str) -> LineIndex {
        let mut starts = vec![0];
        starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex(starts)
    }

    fn pos(&self, src: &str, offset: usize) -> SourcePos {
        let line = self.0.partition_point(|&s| s <= offset);
        let start = self.0[line - 1];
        let col = src[start..offset].chars().count() + 1;
        SourcePos {
            line: line as u32,
            col: col as u32,
        }
    }
}

struct Open {
    name: String,
    element: Element,
}

fn append(parent: &mut Element, node: Node) {
    if let Node::Text(t) = &node {
        if let Some(Node::Text(prev)) = parent.children.last_mut() {
            prev.push(' ');
            prev.push_str(t);
            return;
        }
    }
    parent.children.push(node);
}

/// Parses lossy UTF-8; total over arbitrary bytes.
pub fn parse_bytes(bytes: &[u8], domain: Domain) -> Result<(AnnotatedDocument, Vec<Diagnostic>), MarkupError> {
    parse_document(&String::from_utf8_lossy(bytes), domain)
}

pub fn parse_document(text: &str, domain: Domain) -> Result<(AnnotatedDocument, Vec<Diagnostic>), MarkupError> {
    if text.trim().is_empty() {
        return Err(MarkupError::FatalParse("empty input".into()));
    }
    let lines = LineIndex::new(text);
    let mut diags = Vec::new();
    let mut lexer = Lexer { src: text, pos: 0 };
    let mut stack = vec![Open {
        name: String::new(),
        element: Element::new(Tag::Div),
    }];

    while let Some(token) = lexer.next() {
        match token {
            Token::Text(t) => {
                let t = collapse_ws(&t);
                if !t.is_empty() {
                    append(&mut stack.last_mut().expect("document root").element, Node::Text(t));
                }
            }
            Token::Start {
                name,
                attrs,
                self_closing,
                offset,
            } => {
                let pos = lines.pos(text, offset);
                if DROPPED_RAW.contains(&name.as_str()) {
                    if !self_closing {
                        lexer.raw_text(&name);
                    }
                    diags.push(
                        Diagnostic::new(
                            Severity::Warning,
                            "dropped-element",
                            format!("<{name}> content discarded"),
                        )
                        .at(Some(pos), None),
                    );
                    continue;
                }
                let tag = Tag::from_name(&name).unwrap_or_else(|| {
                    diags.push(
                        Diagnostic::new(Severity::Warning, "unknown-tag", format!("<{name}> treated as div"))
                            .at(Some(pos), None),
                    );
                    Tag::Div
                });
                let mut element = Element::new(tag);
                element.pos = Some(pos);
                let mut attr_map = BTreeMap::new();
                for (k, v) in attrs {
                    if k == "style" {
                        let (decls, warnings) = parse_inline_style(&v);
                        element.style.extend(decls);
                        for w in warnings {
                            let (code, msg) = match w {
                                StyleWarning::UnknownProperty(p) => {
                                    ("unknown-property", format!("unsupported property {p:?} dropped"))
                                }
                                StyleWarning::InvalidValue { property, value } => (
                                    "invalid-value",
                                    format!("unsupported value {value:?} for {property} dropped"),
                                ),
                            };
                            diags.push(Diagnostic::new(Severity::Warning, code, msg).at(Some(pos), None));
                        }
                    } else if !k.is_empty() {
                        attr_map.entry(k).or_insert(v);
                    }
                }
                element.attrs = attr_map;
                let parent = &mut stack.last_mut().expect("document root").element;
                if tag == Tag::Style {
                    if !self_closing {
                        let css = lexer.raw_text("style");
                        if !css.is_empty() {
                            element.children.push(Node::Text(css.to_string()));
                        }
                    }
                    append(parent, Node::Element(element));
                } else if tag.is_void() || self_closing || FOREIGN_VOID.contains(&name.as_str()) {
                    append(parent, Node::Element(element));
                } else {
                    stack.push(Open { name, element });
                }
            }
            Token::End { name, offset } => {
                let found = stack.iter().skip(1).rposition(|o| o.name == name).map(|i| i + 1);
                match found {
                    Some(idx) => {
                        while stack.len() > idx {
                            let open = stack.pop().expect("non-empty");
                            if stack.len() > idx {
                                diags.push(
                                    Diagnostic::new(
                                        Severity::Warning,
                                        "unclosed-tag",
                                        format!("<{}> closed implicitly by </{name}>", open.name),
                                    )
                                    .at(open.element.pos, None),
                                );
                            }
                            append(
                                &mut stack.last_mut().expect("root").element,
                                Node::Element(open.element),
                            );
                        }
                    }
                    None => diags.push(
                        Diagnostic::new(
                            Severity::Warning,
                            "stray-end-tag",
                            format!("</{name}> has no open element"),
                        )
                        .at(Some(lines.pos(text, offset)), None),
                    ),
                }
            }
        }
    }
    while stack.len() > 1 {
        let open = stack.pop().expect("non-empty");
        if !matches!(open.element.tag, Tag::Html | Tag::Body) {
            diags.push(
                Diagnostic::new(
                    Severity::Warning,
                    "unclosed-tag",
                    format!("<{}> closed at end of input", open.name),
                )
                .at(open.element.pos, None),
            );
        }
        append(
            &mut stack.last_mut().expect("root").element,
            Node::Element(open.element),
        );
    }
    let top = stack.pop().expect("root").element;
    let root = normalize(top, &mut diags)?;
    let (doc, derived) = AnnotatedDocument::from_root(root, domain, digest_hex(text.as_bytes()));
    diags.extend(derived);
    Ok((doc, diags))
}

fn take_first(e: &mut Element, tag: Tag) -> Option<Element> {
    for i in 0..e.children.len() {
        if matches!(&e.children[i], Node::Element(c) if c.tag == tag) {
            let Node::Element(found) = e.children.remove(i) else {
                unreachable!()
            };
            return Some(found);
        }
        if let Node::Element(c) = &mut e.children[i] {
            if let Some(found) = take_first(c, tag) {
                return Some(found);
            }
        }
    }
    None
}

/// Produces `<html>` with exactly a `<head>` and a `<body>` child.
fn normalize(mut top: Element, diags: &mut Vec<Diagnostic>) -> Result<Element, MarkupError> {
    let mut html = take_first(&mut top, Tag::Html).unwrap_or_else(|| Element::new(Tag::Html));
    // Content outside <html> (or with no <html> at all) is searched too.
    html.children.append(&mut top.children);
    let Some(body) = take_first(&mut html, Tag::Body) else {
        return Err(MarkupError::FatalParse("no body element".into()));
    };
    let mut head = take_first(&mut html, Tag::Head).unwrap_or_else(|| Element::new(Tag::Head));
    let mut dropped = 0usize;
    let mut relocate = |e: &mut Element, head: &mut Element| {
        for c in std::mem::take(&mut e.children) {
            match c {
                Node::Element(c) if matches!(c.tag, Tag::Meta | Tag::Style) => head.children.push(Node::Element(c)),
                Node::Element(c) => {
                    let mut c = c;
                    let metas: Vec<Node> = {
                        let mut found = Vec::new();
                        while let Some(m) = take_first(&mut c, Tag::Meta) {
                            found.push(Node::Element(m));
                        }
                        found
                    };
                    head.children.extend(metas);
                    dropped += 1;
                }
                Node::Text(_) => dropped += 1,
            }
        }
    };
    relocate(&mut html, &mut head);
    if dropped > 0 {
        diags.push(Diagnostic::new(
            Severity::Warning,
            "content-outside-body",
            format!("{dropped} node(s) outside <head>/<body> dropped"),
        ));
    }
    let mut root = Element::new(Tag::Html);
    root.attrs = html.attrs;
    root.style = html.style;
    root.pos = html.pos;
    root.children = vec![Node::Element(head), Node::Element(body)];
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::{serialize_document, NodePath, Property};

    #[test]
    fn entities_next_to_multibyte_text() {
        assert_eq!(decode_entities("&abcdefghi\u{fffd}x"), "&abcdefghi\u{fffd}x");
        assert_eq!(decode_entities("\u{e9}&amp;\u{e9}"), "\u{e9}&\u{e9}");
        assert_eq!(decode_entities("&#xe9;&#233;"), "\u{e9}\u{e9}");
    }

    fn parse(src: &str, domain: Domain) -> (AnnotatedDocument, Vec<Diagnostic>) {
        parse_document(src, domain).unwrap()
    }

    #[test]
    fn screen_meta_in_head() {
        let (doc, diags) = parse(
            r#"<html><head><meta content="login" name="screentype"></head><body></body></html>"#,
            Domain::Ui,
        );
        assert_eq!(doc.screen_label.unwrap().name, "login");
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn placeholder_img() {
        let (doc, _) = parse(
            r#"<body><img src="placeholder.jpg" alt="Fresh salad bowl" width="200" height="150"></body>"#,
            Domain::Ui,
        );
        assert_eq!(doc.placeholders.len(), 1);
        let p = &doc.placeholders[0];
        assert_eq!(p.alt, "Fresh salad bowl");
        assert_eq!((p.declared_w, p.declared_h), (Some(200), Some(150)));
    }

    #[test]
    fn empty_and_bodiless_inputs_are_fatal() {
        assert!(matches!(
            parse_document("", Domain::Ui),
            Err(MarkupError::FatalParse(_))
        ));
        assert!(matches!(
            parse_document("  \n", Domain::Ui),
            Err(MarkupError::FatalParse(_))
        ));
        assert!(matches!(
            parse_document("<div>hello</div>", Domain::Ui),
            Err(MarkupError::FatalParse(_))
        ));
    }

    #[test]
    fn figures_alias_labels_without_diagnostic() {
        let (doc, diags) = parse(r#"<body><div data-type="figures"></div></body>"#, Domain::Slide);
        assert_eq!(doc.element_labels.len(), 1);
        assert_eq!(doc.element_labels[0].class.name, "image");
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn unknown_label_is_an_error_diagnostic() {
        let (doc, diags) = parse("<body>\n  <div data-type=\"blob\">x</div></body>", Domain::Ui);
        assert!(doc.element_labels.is_empty());
        assert_eq!(doc.unknown_labels.len(), 1);
        let d = diags.iter().find(|d| d.code == "unknown-label").unwrap();
        assert_eq!(d.severity, Severity::Error);
        assert_eq!((d.line, d.col), (Some(2), Some(3)));
        assert_eq!(d.path, Some(NodePath(vec![1, 0])));
    }

    #[test]
    fn tolerant_recovery() {
        let src =
            r#"<html><body><div><p>one<span>two</div><blink>x</blink></b><br><script>var a = "<div>";</script></body>"#;
        let (doc, diags) = parse(src, Domain::Ui);
        let codes: Vec<_> = diags.iter().map(|d| d.code.as_str()).collect();
        assert!(codes.contains(&"unclosed-tag"));
        assert!(codes.contains(&"unknown-tag"));
        assert!(codes.contains(&"stray-end-tag"));
        assert!(codes.contains(&"dropped-element"));
        let body = doc.body();
        // div, blink->div, br->div
        assert_eq!(body.children.len(), 3);
        assert_eq!(doc.extract_text(), "one two x");
    }

    #[test]
    fn unknown_properties_dropped_with_warning() {
        let (doc, diags) = parse(
            r#"<body><div style="width: 10px; bogus-prop: 3; color: red">a</div></body>"#,
            Domain::Ui,
        );
        let div = doc.body().child_elements().next().unwrap().1;
        assert_eq!(div.style.len(), 2);
        assert!(div.style.iter().all(|d| d.property != Property::Display));
        assert_eq!(diags.iter().filter(|d| d.code == "unknown-property").count(), 1);
        let out = serialize_document(&doc);
        assert!(!out.contains("bogus"));
        assert!(out.contains("width: 10px"));
    }

    #[test]
    fn entities_and_attribute_forms() {
        let (doc, _) = parse(
            "<body><p class=a title='x &amp; y' hidden>&lt;ok&gt; &#65;&#x42; &bogus; &</p></body>",
            Domain::Ui,
        );
        let p = doc.body().child_elements().next().unwrap().1;
        assert_eq!(p.attr("class"), Some("a"));
        assert_eq!(p.attr("title"), Some("x & y"));
        assert_eq!(p.attr("hidden"), Some(""));
        assert_eq!(doc.extract_text(), "<ok> AB &bogus; &");
    }

    #[test]
    fn metas_outside_head_are_relocated() {
        let (doc, _) = parse(
            r#"<html><meta name="screentype" content="Settings"><body></body></html>"#,
            Domain::Ui,
        );
        assert_eq!(doc.screen_label.unwrap().name, "settings");
    }

    #[test]
    fn style_block_kept_verbatim() {
        let css = ".menu { data-type: text; color: <red> }";
        let (doc, _) = parse(
            &format!("<html><head><style>{css}</style></head><body></body></html>"),
            Domain::Ui,
        );
        assert_eq!(doc.style_blocks()[0].1, css);
        let (again, _) = parse(&serialize_document(&doc), Domain::Ui);
        assert_eq!(again.style_blocks()[0].1, css);
    }

    #[test]
    fn never_panics_on_odd_inputs() {
        for src in [
            "<",
            "<body",
            "<body><",
            "</",
            "<body></",
            "<body><img src=",
            "<body><a b='",
            "&#xffffffff;<body>",
            "<body><p>é</p><",
            "<body>\u{0}\u{fffd}<",
            "<!--",
            "<body><style>",
            "<script",
            "<bódy></bódy>",
            "<body>< p>",
        ] {
            let _ = parse_document(src, Domain::Ui);
        }
    }
}
